#pragma once

#include <cstddef>
#include <cstdio>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace coachai::service {

struct StoreOptions {
    bool fsync = true;
    std::size_t compact_after = 1000;
};

/// Embedded single-writer document store. Each collection is an append-only
/// JSON-lines log (`<name>.jsonl`, one `{"id","doc"}` upsert per line) plus an
/// optional compacted snapshot (`<name>.snapshot.json`). Opening a directory
/// replays snapshot then log; a torn final line from a crash is ignored.
///
/// Not internally synchronized: callers serialize writes.
class Store {
public:
    /// An empty directory path gives a memory-only store.
    explicit Store(std::filesystem::path dir = {}, StoreOptions options = {});
    ~Store();

    Store(const Store&) = delete;
    Store& operator=(const Store&) = delete;
    Store(Store&&) noexcept;
    Store& operator=(Store&&) noexcept;

    /// Upsert. Durable (written and, with fsync enabled, synced) on return.
    void put(std::string_view collection, const std::string& id, const nlohmann::json& doc);

    std::optional<nlohmann::json> get(std::string_view collection, std::string_view id) const;
    bool contains(std::string_view collection, std::string_view id) const;
    /// Documents in first-insertion order.
    std::vector<nlohmann::json> list(std::string_view collection) const;
    std::size_t size(std::string_view collection) const;
    /// Most recently first-inserted document.
    std::optional<nlohmann::json> last(std::string_view collection) const;

    /// Rewrites every collection's snapshot and truncates the logs.
    void compact();

    /// Full logical state: {collection: [{"id", "doc"}, ...]}.
    nlohmann::json dump() const;

    const std::filesystem::path& directory() const { return dir_; }

private:
    struct Collection {
        std::vector<std::string> order;
        std::map<std::string, nlohmann::json, std::less<>> docs;
        std::FILE* log = nullptr;
        std::size_t appends = 0;
    };

    Collection& open_collection(std::string_view name);
    void load_collection(const std::string& name, Collection& c);
    void compact_collection(const std::string& name, Collection& c);
    void close_all();

    std::filesystem::path dir_;
    StoreOptions options_;
    std::map<std::string, Collection, std::less<>> collections_;
};

}  // namespace coachai::service
