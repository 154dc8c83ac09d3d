#include "csla/service.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <iostream>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "csla/imaging.hpp"

namespace csla {

using nlohmann::json;

namespace {

struct FieldError : std::runtime_error {
    FieldError(std::string field, const std::string& what) : std::runtime_error(what), field(std::move(field)) {}
    std::string field;
};

struct NotFound : std::runtime_error {
    using std::runtime_error::runtime_error;
};

ServiceResponse reply(int status, const json& j) { return {status, j.dump()}; }

ServiceResponse error_reply(int status, const std::string& message, const std::string& field = {}) {
    json j{{"error", message}};
    if (!field.empty()) j["field"] = field;
    return reply(status, j);
}

std::string fnv_handle(const char* prefix, std::string_view a, std::string_view b = {}) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    auto mix = [&](std::string_view s) {
        for (unsigned char c : s) {
            h ^= c;
            h *= 0x100000001b3ull;
        }
        h ^= 0xff;
        h *= 0x100000001b3ull;
    };
    mix(a);
    mix(b);
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return std::string(prefix) + buf;
}

json parse_body(const std::string& body, std::initializer_list<const char*> known) {
    json j;
    try {
        j = json::parse(body);
    } catch (const json::parse_error& e) {
        throw FieldError("", std::string("malformed JSON: ") + e.what());
    }
    if (!j.is_object()) throw FieldError("", "request body must be a JSON object");
    for (const auto& [key, _] : j.items()) {
        bool ok = false;
        for (const char* k : known) ok = ok || key == k;
        if (!ok) throw FieldError(key, "unknown field '" + key + "'");
    }
    return j;
}

std::string string_field(const json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end()) throw FieldError(key, std::string("missing field '") + key + "'");
    if (!it->is_string()) throw FieldError(key, std::string("field '") + key + "' must be a string");
    if (it->get_ref<const std::string&>().empty()) throw FieldError(key, std::string("field '") + key + "' is empty");
    return it->get<std::string>();
}

std::string image_b64(const Image& image) { return base64_encode(encode_png(image)); }

double l2(std::span<const float> v) {
    double s = 0.0;
    for (float x : v) s += static_cast<double>(x) * x;
    return std::sqrt(s);
}

} // namespace

void ServiceConfig::apply_env() {
    if (const char* bind = std::getenv("CSLA_BIND"); bind && *bind) {
        const std::string b(bind);
        const auto colon = b.rfind(':');
        if (colon == std::string::npos) {
            host = b;
        } else {
            host = b.substr(0, colon);
            try {
                port = std::stoi(b.substr(colon + 1));
            } catch (const std::exception&) {
                throw ContractViolation("CSLA_BIND: bad port in '" + b + "'");
            }
        }
    }
    if (const char* ckpt = std::getenv("CSLA_CHECKPOINT"); ckpt && *ckpt) checkpoint = ckpt;
}

void ServiceConfig::validate() const {
    require(!host.empty(), "service: empty bind host");
    require(port >= 0 && port <= 65535, "service: port out of range");
    require(max_concurrent >= 1, "service: max_concurrent must be >= 1");
    require(timeout_s >= 1, "service: timeout must be >= 1 s");
    require(latent_cache >= 1 && direction_cache >= 1, "service: cache sizes must be >= 1");
    require(adapter == "toy", "service: adapter '" + adapter + "' is not available in this build (expected toy)");
}

struct Service::Http {
    httplib::Server server;
};

Service::Service(std::shared_ptr<const Model> model, ServiceConfig config)
    : model_(std::move(model)),
      config_(std::move(config)),
      limiter_(config_.max_concurrent),
      latents_(config_.latent_cache),
      directions_(config_.direction_cache),
      http_(std::make_unique<Http>()) {
    require(model_ != nullptr, "service: model not loaded");
    config_.validate();
    auto& srv = http_->server;
    const int threads = config_.max_concurrent + 2;
    srv.new_task_queue = [threads] { return new httplib::ThreadPool(static_cast<std::size_t>(threads)); };
    srv.set_read_timeout(config_.timeout_s, 0);
    srv.set_write_timeout(config_.timeout_s, 0);
    srv.set_payload_max_length(64u << 20);
    auto forward = [this](const httplib::Request& req, httplib::Response& res) {
        const ServiceResponse r = handle(req.method, req.path, req.body);
        res.status = r.status;
        res.set_content(r.body, "application/json");
    };
    // Every method on a known route goes through handle() so wrong methods get 405.
    for (const char* path : {"/health", "/generate", "/invert", "/direction", "/edit"}) {
        srv.Get(path, forward);
        srv.Post(path, forward);
        srv.Put(path, forward);
        srv.Delete(path, forward);
    }
}

Service::~Service() { stop(); }

ServiceResponse Service::handle(const std::string& method, const std::string& path, const std::string& body) {
    auto slot = limiter_.try_acquire();
    if (!slot) return error_reply(429, "too many concurrent requests");
    try {
        return route(method, path, body);
    } catch (const FieldError& e) {
        return error_reply(400, e.what(), e.field);
    } catch (const NotFound& e) {
        return error_reply(404, e.what());
    } catch (const ContractViolation& e) {
        return error_reply(400, e.what());
    } catch (const std::exception& e) {
        return error_reply(500, e.what());
    }
}

ServiceResponse Service::route(const std::string& method, const std::string& path, const std::string& body) {
    const Model& model = *model_;
    if (path == "/health") {
        if (method != "GET") return error_reply(405, "use GET");
        const auto& g = model.generator().config();
        return reply(200, {{"status", "ok"},
                           {"model_id", model.model_id()},
                           {"n_layers", model.n_layers()},
                           {"resolution", {g.height, g.width}}});
    }
    if (path != "/generate" && path != "/invert" && path != "/direction" && path != "/edit")
        return error_reply(404, "no route " + path);
    if (method != "POST") return error_reply(405, "use POST");

    if (path == "/generate") {
        const json j = parse_body(body, {"text"});
        return reply(200, {{"image_b64", image_b64(model.generate(string_field(j, "text")))}});
    }
    if (path == "/invert") {
        const json j = parse_body(body, {"image_b64"});
        const std::string b64 = string_field(j, "image_b64");
        Image image;
        try {
            image = decode_png(base64_decode(b64));
        } catch (const std::exception& e) {
            throw FieldError("image_b64", std::string("image_b64 is not a base64 PNG: ") + e.what());
        }
        const std::string id = fnv_handle("lat-", b64);
        Latents latents = model.invert(image);
        const std::string recon = image_b64(model.decode(latents, EditSpace::s));
        latents_.put(id, std::move(latents));
        return reply(200, {{"latent_id", id}, {"recon_b64", recon}});
    }
    if (path == "/direction") {
        const json j = parse_body(body, {"src_text", "trg_text"});
        const std::string src = string_field(j, "src_text");
        const std::string trg = string_field(j, "trg_text");
        const std::string id = fnv_handle("dir-", src, trg);
        Direction d = model.direction_from_texts(src, trg);
        json norms = json::array();
        for (const auto& layer : d.delta_s.layers) norms.push_back(l2(layer));
        const double w_norm = l2(d.delta_w.view());
        directions_.put(id, std::move(d));
        return reply(200, {{"direction_id", id}, {"delta_w_norm", w_norm}, {"per_layer_delta_s_norms", norms}});
    }
    // /edit
    const json j = parse_body(body, {"latent_id", "direction_id", "strength", "layer_mask", "space"});
    const std::string latent_id = string_field(j, "latent_id");
    const std::string direction_id = string_field(j, "direction_id");
    float strength = 1.0f;
    if (auto it = j.find("strength"); it != j.end()) {
        if (!it->is_number()) throw FieldError("strength", "field 'strength' must be a number");
        const double s = it->get<double>();
        if (!std::isfinite(s)) throw FieldError("strength", "field 'strength' must be finite");
        strength = static_cast<float>(s);
    }
    std::optional<std::vector<int>> mask;
    if (auto it = j.find("layer_mask"); it != j.end() && !it->is_null()) {
        if (!it->is_array()) throw FieldError("layer_mask", "field 'layer_mask' must be an array of layer indices");
        std::vector<int> m;
        for (const auto& v : *it) {
            if (!v.is_number_integer()) throw FieldError("layer_mask", "layer_mask entries must be integers");
            const auto i = v.get<std::int64_t>();
            if (i < 0 || i >= model.n_layers())
                throw FieldError("layer_mask", "layer index " + std::to_string(i) + " outside [0, " +
                                                   std::to_string(model.n_layers()) + ")");
            m.push_back(static_cast<int>(i));
        }
        mask = std::move(m);
    }
    EditSpace space = EditSpace::s;
    if (auto it = j.find("space"); it != j.end()) {
        if (!it->is_string() || (*it != "w" && *it != "s")) throw FieldError("space", "field 'space' must be \"w\" or \"s\"");
        space = edit_space_from_string(it->get<std::string>());
    }
    const auto latents = latents_.get(latent_id);
    if (!latents) throw NotFound("unknown latent_id '" + latent_id + "'");
    const auto direction = directions_.get(direction_id);
    if (!direction) throw NotFound("unknown direction_id '" + direction_id + "'");
    const Latents edited = model.apply_direction(*latents, *direction, strength, mask, space);
    return reply(200, {{"image_b64", image_b64(model.decode(edited, EditSpace::s))}});
}

int Service::bind() {
    if (config_.port == 0) return http_->server.bind_to_any_port(config_.host);
    return http_->server.bind_to_port(config_.host, config_.port) ? config_.port : -1;
}

bool Service::serve() { return http_->server.listen_after_bind(); }

void Service::stop() {
    if (http_) http_->server.stop();
}

void Service::wait_until_ready() const { http_->server.wait_until_ready(); }

int run_service(ServiceConfig config) {
    config.apply_env();
    config.validate();
    require(!config.checkpoint.empty(), "service: no checkpoint (use --model or CSLA_CHECKPOINT)");
    auto model = std::make_shared<const Model>(Model::from_checkpoint(config.checkpoint));
    Service service(model, config);
    const int port = service.bind();
    if (port < 0) throw std::runtime_error("service: cannot bind " + config.host + ":" + std::to_string(config.port));
    std::cerr << "listening on " << config.host << ":" << port << std::endl;
    return service.serve() ? 0 : 1;
}

} // namespace csla
