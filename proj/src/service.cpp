#include "ticketd/service.hpp"

#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "ticketd/dispatcher.hpp"
#include "ticketd/error.hpp"

namespace ticketd {

namespace {

using nlohmann::json;

json decision_to_json(const DispatchDecision& d) {
    json trace = json::array();
    for (const auto& r : d.trace) {
        trace.push_back({{"stage", r.stage}, {"outcome", r.outcome}});
    }
    return {{"id", d.ticket_id},
            {"group", d.group},
            {"confidence", d.confidence},
            {"source", to_string(d.source)},
            {"trace", trace}};
}

void reply_error(httplib::Response& res, int status, const std::string& message) {
    res.status = status;
    res.set_content(json{{"error", message}}.dump(), "application/json");
}

} // namespace

ClassifyService::ClassifyService() : server_(std::make_unique<httplib::Server>()) {
    install_routes();
}

ClassifyService::~ClassifyService() {
    stop();
}

void ClassifyService::set_artifacts(ModelBundle bundle, RuleSet rules) {
    // Validate the member models up front so a bad bundle never goes live.
    bundle.model(bundle.ensemble.member_a);
    bundle.model(bundle.ensemble.member_b);
    auto shared_bundle = std::make_shared<const ModelBundle>(std::move(bundle));
    auto shared_rules = std::make_shared<const RuleSet>(std::move(rules));
    {
        std::lock_guard<std::mutex> lock(rules_mutex_);
        bundle_ = std::move(shared_bundle);
        rules_ = std::move(shared_rules);
    }
    ready_.store(true);
}

void ClassifyService::replace_rules(const std::string& rule_document) {
    auto parsed = std::make_shared<const RuleSet>(RuleSet::parse(rule_document));
    std::lock_guard<std::mutex> lock(rules_mutex_);
    rules_ = std::move(parsed);
}

std::shared_ptr<const RuleSet> ClassifyService::current_rules() const {
    std::lock_guard<std::mutex> lock(rules_mutex_);
    return rules_;
}

void ClassifyService::install_routes() {
    server_->Post("/classify", [this](const httplib::Request& req, httplib::Response& res) {
        if (!ready_.load()) {
            reply_error(res, 503, "service is not ready (no bundle loaded)");
            return;
        }
        json body = json::parse(req.body, nullptr, false);
        if (body.is_discarded() || !body.is_object()) {
            reply_error(res, 400, "request body must be a JSON object");
            return;
        }
        Ticket t;
        t.id = body.value("id", "adhoc");
        t.subject = body.value("subject", "");
        t.body = body.value("body", "");
        if (t.subject.empty() && t.body.empty()) {
            reply_error(res, 400, "subject and body are both empty");
            return;
        }
        if (body.contains("metadata")) {
            if (!body.at("metadata").is_object()) {
                reply_error(res, 400, "metadata must be an object");
                return;
            }
            for (const auto& [key, value] : body.at("metadata").items()) {
                t.metadata[key] = value.is_string() ? value.get<std::string>() : value.dump();
            }
        }
        const auto bundle = bundle_;
        const auto rules = current_rules();
        try {
            const AssignmentEngine engine(bundle->vocab, bundle->codec,
                                          bundle->model(bundle->ensemble.member_a),
                                          bundle->model(bundle->ensemble.member_b),
                                          bundle->ensemble, *rules);
            const DispatchDecision d = engine.dispatch(t);
            res.set_content(decision_to_json(d).dump(), "application/json");
        } catch (const std::exception& e) {
            reply_error(res, 500, e.what());
        }
    });

    server_->Get("/health", [this](const httplib::Request&, httplib::Response& res) {
        if (!ready_.load()) {
            reply_error(res, 503, "service is not ready (no bundle loaded)");
            return;
        }
        const auto bundle = bundle_;
        const auto rules = current_rules();
        const json j = {{"ready", true},
                        {"format_version", bundle->format_version},
                        {"classes", bundle->codec.size()},
                        {"rules", rules->size()},
                        {"provenance",
                         {{"data_digest", bundle->provenance.data_digest},
                          {"seed", bundle->provenance.seed},
                          {"timestamp", bundle->provenance.timestamp}}}};
        res.set_content(j.dump(), "application/json");
    });

    server_->Put("/rules", [this](const httplib::Request& req, httplib::Response& res) {
        if (!ready_.load()) {
            reply_error(res, 503, "service is not ready (no bundle loaded)");
            return;
        }
        try {
            replace_rules(req.body);
        } catch (const std::exception& e) {
            reply_error(res, 400, e.what()); // old rules stay active
            return;
        }
        res.set_content(json{{"rules", current_rules()->size()}}.dump(), "application/json");
    });
}

void ClassifyService::listen(const std::string& host, int port) {
    if (!server_->listen(host, port)) {
        throw Error("cannot listen on " + host + ":" + std::to_string(port));
    }
}

int ClassifyService::listen_any_port_async(const std::string& host) {
    const int port = server_->bind_to_any_port(host);
    if (port <= 0) {
        throw Error("cannot bind a port on " + host);
    }
    listener_ = std::make_unique<std::thread>([this] { server_->listen_after_bind(); });
    server_->wait_until_ready();
    return port;
}

void ClassifyService::stop() {
    if (server_) {
        server_->stop();
    }
    if (listener_ && listener_->joinable()) {
        listener_->join();
        listener_.reset();
    }
}

void ClassifyService::wait_until_ready() {
    server_->wait_until_ready();
}

} // namespace ticketd
