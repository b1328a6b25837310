#pragma once

#include <atomic>
#include <memory>
#include <mutex>
#include <string>
#include <thread>

#include "ticketd/bundle.hpp"
#include "ticketd/rules.hpp"

namespace httplib {
class Server;
}

namespace ticketd {

/// Classify-over-HTTP shell around the dispatch pipeline.
///
///   POST /classify  {subject, body, metadata?, id?} -> decision fields
///   GET  /health    bundle provenance and readiness
///   PUT  /rules     replaces the rule set after validation (atomic swap)
///
/// The bundle is immutable after load; requests share it read-only. Rule
/// reloads swap the whole RuleSet, so every request sees one consistent set.
class ClassifyService {
public:
    ClassifyService();
    ~ClassifyService();

    ClassifyService(const ClassifyService&) = delete;
    ClassifyService& operator=(const ClassifyService&) = delete;

    /// Installs the model bundle and rules; flips the service to ready.
    void set_artifacts(ModelBundle bundle, RuleSet rules);

    bool ready() const { return ready_.load(); }

    /// Validates and swaps the rule set. Throws on parse errors (the old
    /// rules stay active).
    void replace_rules(const std::string& rule_document);

    /// Blocking listen; returns when stop() is called. Throws if the port
    /// cannot be bound.
    void listen(const std::string& host, int port);

    /// Binds an ephemeral port and starts listening in the background;
    /// returns the chosen port. For tests.
    int listen_any_port_async(const std::string& host);

    void stop();
    void wait_until_ready();

private:
    std::shared_ptr<const RuleSet> current_rules() const;
    void install_routes();

    std::unique_ptr<httplib::Server> server_;
    std::shared_ptr<const ModelBundle> bundle_;
    std::shared_ptr<const RuleSet> rules_;
    mutable std::mutex rules_mutex_;
    std::atomic<bool> ready_{false};
    std::unique_ptr<std::thread> listener_;
};

} // namespace ticketd
