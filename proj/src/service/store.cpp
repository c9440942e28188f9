#include "coachai/service/store.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <fstream>
#include <sstream>

#include "coachai/error.hpp"

namespace coachai::service {

namespace fs = std::filesystem;

namespace {

void sync_file(std::FILE* f, bool do_fsync) {
    if (std::fflush(f) != 0) throw Error(ErrorKind::io, "flush failed");
    if (do_fsync && ::fsync(::fileno(f)) != 0) throw Error(ErrorKind::io, "fsync failed");
}

void sync_directory(const fs::path& dir) {
    int fd = ::open(dir.c_str(), O_RDONLY | O_DIRECTORY);
    if (fd < 0) return;
    ::fsync(fd);
    ::close(fd);
}

void upsert(std::vector<std::string>& order, std::map<std::string, nlohmann::json, std::less<>>& docs,
            const std::string& id, nlohmann::json doc) {
    auto [it, inserted] = docs.insert_or_assign(id, std::move(doc));
    (void)it;
    if (inserted) order.push_back(id);
}

}  // namespace

Store::Store(fs::path dir, StoreOptions options) : dir_(std::move(dir)), options_(options) {
    if (dir_.empty()) return;
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec) throw Error(ErrorKind::io, "cannot create " + dir_.string() + ": " + ec.message());
    for (const auto& entry : fs::directory_iterator(dir_)) {
        const auto name = entry.path().filename().string();
        std::string coll;
        if (name.ends_with(".jsonl")) coll = name.substr(0, name.size() - 6);
        else if (name.ends_with(".snapshot.json")) coll = name.substr(0, name.size() - 14);
        else continue;
        if (!collections_.contains(coll)) open_collection(coll);
    }
}

Store::~Store() { close_all(); }

Store::Store(Store&& o) noexcept
    : dir_(std::move(o.dir_)), options_(o.options_), collections_(std::move(o.collections_)) {
    o.collections_.clear();
}

Store& Store::operator=(Store&& o) noexcept {
    if (this != &o) {
        close_all();
        dir_ = std::move(o.dir_);
        options_ = o.options_;
        collections_ = std::move(o.collections_);
        o.collections_.clear();
    }
    return *this;
}

void Store::close_all() {
    for (auto& [name, c] : collections_) {
        if (c.log) std::fclose(c.log);
        c.log = nullptr;
    }
}

void Store::load_collection(const std::string& name, Collection& c) {
    const auto snap = dir_ / (name + ".snapshot.json");
    if (fs::exists(snap)) {
        std::ifstream in(snap);
        nlohmann::json j;
        try {
            in >> j;
        } catch (const nlohmann::json::exception& e) {
            throw Error(ErrorKind::io, "corrupt snapshot " + snap.string() + ": " + e.what());
        }
        for (const auto& row : j.at("docs")) upsert(c.order, c.docs, row.at("id").get<std::string>(), row.at("doc"));
    }
    const auto log = dir_ / (name + ".jsonl");
    if (!fs::exists(log)) return;
    std::ifstream in(log, std::ios::binary);
    std::stringstream buf;
    buf << in.rdbuf();
    const std::string content = buf.str();
    std::size_t pos = 0;
    std::size_t good_end = 0;
    while (pos < content.size()) {
        const auto nl = content.find('\n', pos);
        if (nl == std::string::npos) break;  // torn tail: no newline yet
        const std::string_view line(content.data() + pos, nl - pos);
        if (!line.empty()) {
            nlohmann::json row;
            try {
                row = nlohmann::json::parse(line);
            } catch (const nlohmann::json::exception&) {
                // Only the final record may be torn; anything earlier is corruption.
                if (nl + 1 < content.size())
                    throw Error(ErrorKind::io, "corrupt record in " + log.string() + " at byte " + std::to_string(pos));
                break;
            }
            upsert(c.order, c.docs, row.at("id").get<std::string>(), row.at("doc"));
        }
        pos = nl + 1;
        good_end = pos;
    }
    if (good_end < content.size()) fs::resize_file(log, good_end);
}

Store::Collection& Store::open_collection(std::string_view name) {
    if (auto it = collections_.find(name); it != collections_.end()) return it->second;
    if (name.empty() || name.find_first_of("/\\.") != std::string_view::npos)
        throw Error(ErrorKind::invalid_argument, "bad collection name: " + std::string(name));
    auto& c = collections_[std::string(name)];
    if (!dir_.empty()) {
        load_collection(std::string(name), c);
        const auto log = dir_ / (std::string(name) + ".jsonl");
        c.log = std::fopen(log.c_str(), "ab");
        if (!c.log) throw Error(ErrorKind::io, "cannot open " + log.string());
    }
    return c;
}

void Store::put(std::string_view collection, const std::string& id, const nlohmann::json& doc) {
    if (id.empty()) throw Error(ErrorKind::invalid_argument, "empty document id");
    auto& c = open_collection(collection);
    if (c.log) {
        std::string line = nlohmann::json{{"id", id}, {"doc", doc}}.dump();
        line.push_back('\n');
        if (std::fwrite(line.data(), 1, line.size(), c.log) != line.size())
            throw Error(ErrorKind::io, "write failed for " + std::string(collection));
        sync_file(c.log, options_.fsync);
    }
    upsert(c.order, c.docs, id, doc);
    if (c.log && ++c.appends >= options_.compact_after) compact_collection(std::string(collection), c);
}

std::optional<nlohmann::json> Store::get(std::string_view collection, std::string_view id) const {
    auto it = collections_.find(collection);
    if (it == collections_.end()) return std::nullopt;
    auto d = it->second.docs.find(id);
    if (d == it->second.docs.end()) return std::nullopt;
    return d->second;
}

bool Store::contains(std::string_view collection, std::string_view id) const {
    auto it = collections_.find(collection);
    return it != collections_.end() && it->second.docs.contains(id);
}

std::vector<nlohmann::json> Store::list(std::string_view collection) const {
    std::vector<nlohmann::json> out;
    auto it = collections_.find(collection);
    if (it == collections_.end()) return out;
    out.reserve(it->second.order.size());
    for (const auto& id : it->second.order) out.push_back(it->second.docs.find(id)->second);
    return out;
}

std::size_t Store::size(std::string_view collection) const {
    auto it = collections_.find(collection);
    return it == collections_.end() ? 0 : it->second.order.size();
}

std::optional<nlohmann::json> Store::last(std::string_view collection) const {
    auto it = collections_.find(collection);
    if (it == collections_.end() || it->second.order.empty()) return std::nullopt;
    return it->second.docs.find(it->second.order.back())->second;
}

void Store::compact_collection(const std::string& name, Collection& c) {
    if (dir_.empty()) return;
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& id : c.order) rows.push_back({{"id", id}, {"doc", c.docs.find(id)->second}});
    const auto snap = dir_ / (name + ".snapshot.json");
    const auto tmp = dir_ / (name + ".snapshot.json.tmp");
    {
        std::FILE* f = std::fopen(tmp.c_str(), "wb");
        if (!f) throw Error(ErrorKind::io, "cannot write " + tmp.string());
        const std::string body = nlohmann::json{{"version", 1}, {"docs", rows}}.dump();
        const bool ok = std::fwrite(body.data(), 1, body.size(), f) == body.size();
        sync_file(f, options_.fsync);
        std::fclose(f);
        if (!ok) throw Error(ErrorKind::io, "write failed for " + tmp.string());
    }
    fs::rename(tmp, snap);
    if (options_.fsync) sync_directory(dir_);
    // A crash before this truncation replays upserts already in the snapshot,
    // which is harmless.
    const auto log = dir_ / (name + ".jsonl");
    std::fclose(c.log);
    c.log = std::fopen(log.c_str(), "wb");
    if (!c.log) throw Error(ErrorKind::io, "cannot reopen " + log.string());
    sync_file(c.log, options_.fsync);
    c.appends = 0;
}

void Store::compact() {
    for (auto& [name, c] : collections_) compact_collection(name, c);
}

nlohmann::json Store::dump() const {
    nlohmann::json out = nlohmann::json::object();
    for (const auto& [name, c] : collections_) {
        nlohmann::json rows = nlohmann::json::array();
        for (const auto& id : c.order) rows.push_back({{"id", id}, {"doc", c.docs.find(id)->second}});
        out[name] = std::move(rows);
    }
    return out;
}

}  // namespace coachai::service
