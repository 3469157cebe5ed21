#include <algorithm>
#include <fstream>

#include "pocforge/refiner/refiner.hpp"

namespace pocforge::refiner {

using nlohmann::json;

RewardStore::RewardStore(std::filesystem::path path, std::size_t cache_capacity)
    : path_(std::move(path)), cache_capacity_(std::max<std::size_t>(1, cache_capacity)) {
    std::error_code ec;
    if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path(), ec);
    // Rebuild the index when re-opening an existing store.
    std::ifstream in(path_);
    if (!in) return;
    std::string line;
    std::streamoff offset = 0;
    while (std::getline(in, line)) {
        const std::streamoff next = offset + static_cast<std::streamoff>(line.size()) + 1;
        if (!line.empty()) {
            json doc = json::parse(line, nullptr, false);
            if (doc.is_discarded())
                throw Error(ErrorCode::store_io_error, "corrupt reward store: " + path_.string());
            RewardRecord r = doc.get<RewardRecord>();
            index_.push_back({r.record_id, r.iteration, r.strategic_score, r.error_type, offset});
        }
        offset = next;
    }
}

std::string RewardStore::store_reward(const RewardRecord& record) {
    for (const auto& e : index_)
        if (e.record_id == record.record_id)
            throw Error(ErrorCode::store_io_error,
                        "duplicate record id: " + record.record_id);
    std::ofstream out(path_, std::ios::app);
    if (!out) throw Error(ErrorCode::store_io_error, "cannot open store: " + path_.string());
    const std::streamoff offset = out.tellp();
    out << json(record).dump() << '\n';
    if (!out) throw Error(ErrorCode::store_io_error, "write failed: " + path_.string());
    index_.push_back({record.record_id, record.iteration, record.strategic_score,
                      record.error_type, offset});
    return record.record_id;
}

RewardRecord RewardStore::read_at(std::streamoff offset) const {
    std::ifstream in(path_);
    if (!in) throw Error(ErrorCode::store_io_error, "cannot open store: " + path_.string());
    in.seekg(offset);
    std::string line;
    if (!std::getline(in, line))
        throw Error(ErrorCode::store_io_error, "truncated store: " + path_.string());
    json doc = json::parse(line, nullptr, false);
    if (doc.is_discarded())
        throw Error(ErrorCode::store_io_error, "corrupt record at offset");
    return doc.get<RewardRecord>();
}

RewardRecord RewardStore::cached_load(const IndexEntry& entry) const {
    auto it = cache_.find(entry.record_id);
    if (it != cache_.end()) {
        ++cache_hits_;
        lru_.erase(it->second.second);
        lru_.push_front(entry.record_id);
        it->second.second = lru_.begin();
        return it->second.first;
    }
    ++cache_misses_;
    RewardRecord record = read_at(entry.offset);
    lru_.push_front(entry.record_id);
    cache_.emplace(entry.record_id, std::make_pair(record, lru_.begin()));
    while (cache_.size() > cache_capacity_) {
        cache_.erase(lru_.back());
        lru_.pop_back();
    }
    return record;
}

std::vector<RewardRecord> RewardStore::retrieve_recent(int k) const {
    std::vector<const IndexEntry*> sorted;
    for (const auto& e : index_) sorted.push_back(&e);
    std::stable_sort(sorted.begin(), sorted.end(),
                     [](const IndexEntry* a, const IndexEntry* b) {
                         return a->iteration > b->iteration;
                     });
    std::vector<RewardRecord> out;
    for (const auto* e : sorted) {
        if (static_cast<int>(out.size()) >= k) break;
        out.push_back(cached_load(*e));
    }
    return out;
}

std::vector<RewardRecord> RewardStore::retrieve_by_error(FailureCategory error_type) const {
    std::vector<const IndexEntry*> matches;
    for (const auto& e : index_)
        if (e.error_type && *e.error_type == error_type) matches.push_back(&e);
    std::stable_sort(matches.begin(), matches.end(),
                     [](const IndexEntry* a, const IndexEntry* b) {
                         if (a->strategic_score != b->strategic_score)
                             return a->strategic_score > b->strategic_score;
                         return a->iteration > b->iteration;  // ties by recency
                     });
    std::vector<RewardRecord> out;
    for (const auto* e : matches) out.push_back(cached_load(*e));
    return out;
}

RewardRecord RewardStore::load_content(const std::string& record_id) const {
    for (const auto& e : index_)
        if (e.record_id == record_id) return cached_load(e);
    throw Error(ErrorCode::unknown_record_id, "no such record: " + record_id);
}

}  // namespace pocforge::refiner
