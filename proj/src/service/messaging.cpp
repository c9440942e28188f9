#include "coachai/service/messaging.hpp"

namespace coachai::service {

void to_json(nlohmann::json& j, const ChatInbound& m) {
    j = {{"session_key", m.session_key}, {"text", m.text}, {"timestamp", m.timestamp}};
}

void from_json(const nlohmann::json& j, ChatInbound& m) {
    m.session_key = j.at("session_key").get<std::string>();
    m.text = j.at("text").get<std::string>();
    m.timestamp = j.value("timestamp", Timestamp{0});
}

void to_json(nlohmann::json& j, const ChatOutbound& m) {
    j = {{"session_key", m.session_key}, {"text", m.text}, {"quick_replies", m.quick_replies}};
}

void from_json(const nlohmann::json& j, ChatOutbound& m) {
    m.session_key = j.at("session_key").get<std::string>();
    m.text = j.at("text").get<std::string>();
    m.quick_replies = j.value("quick_replies", std::vector<std::string>{});
}

void LoopbackSink::deliver(const ChatOutbound& message) {
    std::lock_guard lock(mu_);
    queue_.push_back(message);
}

std::vector<ChatOutbound> LoopbackSink::drain() {
    std::lock_guard lock(mu_);
    std::vector<ChatOutbound> out(queue_.begin(), queue_.end());
    queue_.clear();
    return out;
}

std::size_t LoopbackSink::pending() const {
    std::lock_guard lock(mu_);
    return queue_.size();
}

void StreamSink::deliver(const ChatOutbound& message) {
    std::lock_guard lock(mu_);
    out_ << nlohmann::json(message).dump() << '\n';
    out_.flush();
}

}  // namespace coachai::service
