#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <list>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>

#include "csla/inference.hpp"

namespace csla {

struct ServiceConfig {
    std::string host = "127.0.0.1";
    int port = 8080;
    std::filesystem::path checkpoint;
    std::string adapter = "toy";
    int max_concurrent = 4;
    int timeout_s = 30;
    std::size_t latent_cache = 256;
    std::size_t direction_cache = 256;

    // CSLA_BIND ("host:port" or "host") and CSLA_CHECKPOINT override the
    // corresponding fields when set.
    void apply_env();
    void validate() const;
};

/// Thread-safe least-recently-used map from handle to value.
template <typename V>
class LruCache {
public:
    explicit LruCache(std::size_t capacity) : capacity_(capacity) {}

    void put(const std::string& key, V value) {
        std::lock_guard lock(mutex_);
        if (auto it = index_.find(key); it != index_.end()) {
            it->second->second = std::move(value);
            order_.splice(order_.begin(), order_, it->second);
            return;
        }
        order_.emplace_front(key, std::move(value));
        index_[key] = order_.begin();
        while (order_.size() > capacity_) {
            index_.erase(order_.back().first);
            order_.pop_back();
        }
    }

    std::optional<V> get(const std::string& key) {
        std::lock_guard lock(mutex_);
        auto it = index_.find(key);
        if (it == index_.end()) return std::nullopt;
        order_.splice(order_.begin(), order_, it->second);
        return it->second->second;
    }

    std::size_t size() const {
        std::lock_guard lock(mutex_);
        return order_.size();
    }

private:
    using Entry = std::pair<std::string, V>;
    std::size_t capacity_;
    mutable std::mutex mutex_;
    std::list<Entry> order_;
    std::unordered_map<std::string, typename std::list<Entry>::iterator> index_;
};

class ConcurrencyLimiter {
public:
    explicit ConcurrencyLimiter(int limit) : limit_(limit) {}

    class Slot {
    public:
        explicit Slot(ConcurrencyLimiter* owner) : owner_(owner) {}
        Slot(Slot&& other) noexcept : owner_(std::exchange(other.owner_, nullptr)) {}
        Slot(const Slot&) = delete;
        Slot& operator=(const Slot&) = delete;
        Slot& operator=(Slot&&) = delete;
        ~Slot() {
            if (owner_) owner_->in_flight_.fetch_sub(1);
        }

    private:
        ConcurrencyLimiter* owner_;
    };

    std::optional<Slot> try_acquire() {
        if (in_flight_.fetch_add(1) >= limit_) {
            in_flight_.fetch_sub(1);
            return std::nullopt;
        }
        return Slot(this);
    }
    int in_flight() const { return in_flight_.load(); }

private:
    int limit_;
    std::atomic<int> in_flight_{0};
};

struct ServiceResponse {
    int status = 200;
    std::string body;  // JSON
};

/// Request handling independent of the transport, plus an HTTP front end.
class Service {
public:
    Service(std::shared_ptr<const Model> model, ServiceConfig config);
    ~Service();

    ServiceResponse handle(const std::string& method, const std::string& path, const std::string& body);

    // Binds to config.host:config.port (0 picks a free port) and returns the
    // bound port, or -1 on failure.
    int bind();
    // Serves until stop(); call after bind().
    bool serve();
    void stop();
    void wait_until_ready() const;

    ConcurrencyLimiter& limiter() { return limiter_; }
    const ServiceConfig& config() const { return config_; }
    std::size_t cached_latents() const { return latents_.size(); }
    std::size_t cached_directions() const { return directions_.size(); }

private:
    ServiceResponse route(const std::string& method, const std::string& path, const std::string& body);

    std::shared_ptr<const Model> model_;
    ServiceConfig config_;
    ConcurrencyLimiter limiter_;
    LruCache<Latents> latents_;
    LruCache<Direction> directions_;
    struct Http;
    std::unique_ptr<Http> http_;
};

// Loads the checkpoint once and serves until the process is stopped.
int run_service(ServiceConfig config);

} // namespace csla
