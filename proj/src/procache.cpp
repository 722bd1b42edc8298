#include "blocks/procache.hpp"

#include <cmath>

#include "blocks/error.hpp"

namespace blocks {

std::string_view policy_name(CachePolicy p) noexcept {
  switch (p) {
    case CachePolicy::PROCache: return "PROCache";
    case CachePolicy::LFU: return "LFU";
    case CachePolicy::LRUk: return "LRUk";
  }
  return "?";
}

std::optional<CachePolicy> parse_policy(std::string_view name) noexcept {
  if (name == "PROCache") return CachePolicy::PROCache;
  if (name == "LFU") return CachePolicy::LFU;
  if (name == "LRUk") return CachePolicy::LRUk;
  return std::nullopt;
}

void CacheConfig::validate() const {
  if (capacity < 1) throw Error(Errc::ConfigError, "cache.capacity must be >= 1");
  if (k < 1) throw Error(Errc::ConfigError, "cache.k must be >= 1");
  if (history_capacity < 1) throw Error(Errc::ConfigError, "cache.history_capacity must be >= 1");
  if (!(r_b >= 0.0 && r_b <= 1.0)) throw Error(Errc::ConfigError, "cache.r_b must be in [0, 1]");
  if (!(similarity_threshold >= -1.0 && similarity_threshold <= 1.0)) {
    throw Error(Errc::ConfigError, "cache.similarity_threshold must be in [-1, 1]");
  }
}

std::string cache_node_id(const Digest& hash, std::uint32_t count) {
  return to_hex(hash) + "-" + std::to_string(count);
}

double priority_of(std::uint64_t frequency, double cost, double size, double reputation,
                   double r_b) {
  if (frequency < 1 || !(cost > 0.0) || !(size > 0.0)) {
    throw Error(Errc::NonPositiveInput, "priority needs frequency >= 1, cost > 0, size > 0");
  }
  const double base = std::max(static_cast<double>(frequency) * cost / size, 1.0);
  return std::pow(base, reputation - r_b);
}

// ---------------------------------------------------------------------------

KnowledgeCache::KnowledgeCache(CacheConfig config) : config_(std::move(config)) {
  config_.validate();
}

AccessResult KnowledgeCache::access(const Digest& hash, std::int64_t round) {
  auto it = by_hash_.find(hash);
  if (it == by_hash_.end()) return on_miss(hash, round);
  CacheNode& node = nodes_.at(it->second);
  ++node.frequency;
  on_hit(node, next_stamp(round));
  return {true, false, &node};
}

std::vector<std::string> KnowledgeCache::insert(CacheNode node, std::int64_t round) {
  if (nodes_.contains(node.node_id)) throw Error(Errc::DuplicateNodeId, node.node_id);
  if (by_hash_.contains(node.hash)) throw Error(Errc::DuplicateNodeId, "hash of " + node.node_id);

  const std::string id = node.node_id;
  by_hash_[node.hash] = id;
  auto [it, _] = nodes_.emplace(id, std::move(node));
  try {
    on_insert(it->second, next_stamp(round));
  } catch (...) {
    by_hash_.erase(it->second.hash);
    nodes_.erase(it);
    throw;
  }

  std::vector<std::string> evicted;
  while (nodes_.size() > config_.capacity) {
    const std::string victim_id = *victim();
    auto vit = nodes_.find(victim_id);
    on_erase(vit->second);
    by_hash_.erase(vit->second.hash);
    nodes_.erase(vit);
    evicted.push_back(victim_id);
    ++evictions_;
  }
  return evicted;
}

std::optional<RetrieveHit> KnowledgeCache::retrieve(std::span<const double> query_embedding,
                                                    double threshold) const {
  if (!is_unit(query_embedding)) throw Error(Errc::BadEmbedding, "query embedding is not unit norm");
  std::optional<RetrieveHit> best;
  // nodes_ iterates in id order, so strict > keeps the smallest id on ties.
  for (const auto& [id, node] : nodes_) {
    const double sim = dot(query_embedding, node.metadata.embedding);
    if (!best || sim > best->similarity) best = RetrieveHit{&node, sim};
  }
  if (best && best->similarity >= threshold) return best;
  return std::nullopt;
}

void KnowledgeCache::update_reputation(const std::string& node_id, double reputation) {
  auto it = nodes_.find(node_id);
  if (it == nodes_.end()) throw Error(Errc::MissingNode, node_id);
  it->second.metadata.reputation = reputation;
  on_reputation(it->second);
}

const CacheNode* KnowledgeCache::find(const std::string& node_id) const {
  auto it = nodes_.find(node_id);
  return it == nodes_.end() ? nullptr : &it->second;
}

const CacheNode* KnowledgeCache::find_by_hash(const Digest& hash) const {
  auto it = by_hash_.find(hash);
  return it == by_hash_.end() ? nullptr : &nodes_.at(it->second);
}

const HistoryEntry* KnowledgeCache::history(const Digest& hash) const {
  const auto* pc = dynamic_cast<const ProCache*>(this);
  return pc == nullptr ? nullptr : pc->history_entry(hash);
}

std::vector<const CacheNode*> KnowledgeCache::residents() const {
  std::vector<const CacheNode*> out;
  out.reserve(nodes_.size());
  for (const auto& [_, node] : nodes_) out.push_back(&node);
  return out;
}

double KnowledgeCache::mean_reputation() const {
  if (nodes_.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& [_, node] : nodes_) sum += node.metadata.reputation;
  return sum / static_cast<double>(nodes_.size());
}

// --- PROCache --------------------------------------------------------------

AccessResult ProCache::on_miss(const Digest& hash, std::int64_t round) {
  auto it = history_.find(hash);
  if (it == history_.end()) {
    it = history_.emplace(hash, HistoryEntry{hash, 0, round}).first;
    history_order_.push_back(hash);
  }
  HistoryEntry& entry = it->second;
  ++entry.access_count;
  entry.last_access_round = round;

  if (entry.access_count >= config_.k) {
    history_.erase(it);
    std::erase(history_order_, hash);
    return {false, true, nullptr};
  }

  while (history_.size() > config_.history_capacity) {
    history_.erase(history_order_.front());
    history_order_.pop_front();
  }
  return {false, false, nullptr};
}

void ProCache::reindex(CacheNode& node) {
  node.priority = priority_of(node.frequency, node.metadata.cost, node.metadata.size,
                              node.metadata.reputation, config_.r_b);
  auto& key = heap_pos_.at(node.node_id);
  heap_.erase(key);
  std::get<0>(key) = node.priority;
  heap_.insert(key);
}

void ProCache::on_hit(CacheNode& node, Stamp stamp) {
  auto& key = heap_pos_.at(node.node_id);
  heap_.erase(key);
  node.priority = priority_of(node.frequency, node.metadata.cost, node.metadata.size,
                              node.metadata.reputation, config_.r_b);
  key = HeapKey{node.priority, stamp, node.node_id};
  heap_.insert(key);
}

const HistoryEntry* ProCache::history_entry(const Digest& hash) const {
  auto it = history_.find(hash);
  return it == history_.end() ? nullptr : &it->second;
}

void ProCache::on_insert(CacheNode& node, Stamp stamp) {
  if (node.frequency < config_.k) {
    throw Error(Errc::OutOfRange, node.node_id + " inserted before reaching k accesses");
  }
  node.priority = priority_of(node.frequency, node.metadata.cost, node.metadata.size,
                              node.metadata.reputation, config_.r_b);
  HeapKey key{node.priority, stamp, node.node_id};
  heap_.insert(key);
  heap_pos_[node.node_id] = key;
}

void ProCache::on_erase(const CacheNode& node) {
  auto it = heap_pos_.find(node.node_id);
  heap_.erase(it->second);
  heap_pos_.erase(it);
}

void ProCache::on_reputation(CacheNode& node) { reindex(node); }

std::optional<std::string> ProCache::victim() const {
  if (heap_.empty()) return std::nullopt;
  return std::get<2>(*heap_.begin());
}

// --- LFU -------------------------------------------------------------------

AccessResult LfuCache::on_miss(const Digest&, std::int64_t) { return {false, true, nullptr}; }

void LfuCache::on_hit(CacheNode& node, Stamp stamp) {
  auto& key = pos_.at(node.node_id);
  order_.erase(key);
  key = Key{node.frequency, stamp, node.node_id};
  order_.insert(key);
}

void LfuCache::on_insert(CacheNode& node, Stamp stamp) {
  Key key{node.frequency, stamp, node.node_id};
  order_.insert(key);
  pos_[node.node_id] = key;
}

void LfuCache::on_erase(const CacheNode& node) {
  auto it = pos_.find(node.node_id);
  order_.erase(it->second);
  pos_.erase(it);
}

std::optional<std::string> LfuCache::victim() const {
  if (order_.empty()) return std::nullopt;
  return std::get<2>(*order_.begin());
}

// --- LRU-K -----------------------------------------------------------------

AccessResult LrukCache::on_miss(const Digest&, std::int64_t) { return {false, true, nullptr}; }

void LrukCache::record(const std::string& id, Stamp stamp) {
  auto& hist = accesses_[id];
  hist.push_back(stamp);
  while (hist.size() > config_.k) hist.pop_front();

  Key key = hist.size() < config_.k ? Key{0, hist.back(), id} : Key{1, hist.front(), id};
  if (auto it = pos_.find(id); it != pos_.end()) {
    order_.erase(it->second);
    it->second = key;
  } else {
    pos_[id] = key;
  }
  order_.insert(key);
}

void LrukCache::on_hit(CacheNode& node, Stamp stamp) { record(node.node_id, stamp); }

void LrukCache::on_insert(CacheNode& node, Stamp stamp) { record(node.node_id, stamp); }

void LrukCache::on_erase(const CacheNode& node) {
  auto it = pos_.find(node.node_id);
  order_.erase(it->second);
  pos_.erase(it);
  accesses_.erase(node.node_id);
}

std::optional<std::string> LrukCache::victim() const {
  if (order_.empty()) return std::nullopt;
  return std::get<2>(*order_.begin());
}

std::unique_ptr<KnowledgeCache> make_cache(CachePolicy policy, const CacheConfig& config) {
  switch (policy) {
    case CachePolicy::PROCache: return std::make_unique<ProCache>(config);
    case CachePolicy::LFU: return std::make_unique<LfuCache>(config);
    case CachePolicy::LRUk: return std::make_unique<LrukCache>(config);
  }
  throw Error(Errc::ConfigError, "unknown cache policy");
}

}  // namespace blocks
