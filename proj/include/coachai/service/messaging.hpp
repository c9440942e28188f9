#pragma once

#include <deque>
#include <mutex>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "coachai/patient.hpp"

namespace coachai::service {

struct ChatInbound {
    std::string session_key;
    std::string text;
    Timestamp timestamp = 0;
};

struct ChatOutbound {
    std::string session_key;
    std::string text;
    std::vector<std::string> quick_replies;
};

void to_json(nlohmann::json& j, const ChatInbound& m);
void from_json(const nlohmann::json& j, ChatInbound& m);
void to_json(nlohmann::json& j, const ChatOutbound& m);
void from_json(const nlohmann::json& j, ChatOutbound& m);

/// Outbound channel for messages the platform initiates (assignments,
/// feedback prompts). Replies to inbound chat are returned synchronously.
class MessageSink {
public:
    virtual ~MessageSink() = default;
    virtual void deliver(const ChatOutbound& message) = 0;
};

/// Keeps messages in memory; used by tests and the simulator.
class LoopbackSink final : public MessageSink {
public:
    void deliver(const ChatOutbound& message) override;
    std::vector<ChatOutbound> drain();
    std::size_t pending() const;

private:
    mutable std::mutex mu_;
    std::deque<ChatOutbound> queue_;
};

/// Writes one JSON object per line to a stream (stdout, a pipe, a file).
class StreamSink final : public MessageSink {
public:
    explicit StreamSink(std::ostream& out) : out_(out) {}
    void deliver(const ChatOutbound& message) override;

private:
    std::mutex mu_;
    std::ostream& out_;
};

}  // namespace coachai::service
