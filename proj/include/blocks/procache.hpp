#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "blocks/types.hpp"

namespace blocks {

enum class CachePolicy { PROCache, LFU, LRUk };

std::string_view policy_name(CachePolicy p) noexcept;
std::optional<CachePolicy> parse_policy(std::string_view name) noexcept;

struct CacheConfig {
  std::size_t capacity = 32;
  /// PROCache admission threshold; also the K of LRU-K.
  std::uint32_t k = 2;
  double r_b = 0.5;
  std::size_t history_capacity = 1024;
  double similarity_threshold = 0.9;

  void validate() const;
};

/// Cache nodes are sized in abstract units, one per prompt, so frequency and
/// cost (tokens) drive the priority base rather than byte length.
inline constexpr double kPromptSizeUnits = 1.0;

struct CacheMetadata {
  Embedding embedding;
  double cost = 1.0;
  double size = 1.0;
  double reputation = 0.0;
};

struct CacheNode {
  std::string node_id;
  Digest hash{};
  std::string content;
  NodeId supplier_id;
  CacheMetadata metadata;
  std::uint64_t frequency = 1;
  double priority = 1.0;
};

struct HistoryEntry {
  Digest hash{};
  std::uint32_t access_count = 0;
  std::int64_t last_access_round = 0;
};

/// Node id derived from the prompt hash and its collision count.
std::string cache_node_id(const Digest& hash, std::uint32_t count);

/// (max(frequency * cost / size, 1)) ^ (reputation - r_b)
///
/// The base is clamped at 1 so a sub-unit base cannot turn a negative
/// exponent into a reward for low reputation.
double priority_of(std::uint64_t frequency, double cost, double size, double reputation,
                   double r_b);

struct AccessResult {
  bool hit = false;
  /// Miss only: the caller should now insert the full node.
  bool promoted = false;
  const CacheNode* node = nullptr;
};

struct RetrieveHit {
  const CacheNode* node = nullptr;
  double similarity = 0.0;
};

/// Common surface of PROCache and the baselines. Single writer; retrieve() is
/// safe to call concurrently between mutations.
class KnowledgeCache {
 public:
  explicit KnowledgeCache(CacheConfig config);
  virtual ~KnowledgeCache() = default;
  KnowledgeCache(const KnowledgeCache&) = delete;
  KnowledgeCache& operator=(const KnowledgeCache&) = delete;

  virtual CachePolicy policy() const = 0;

  AccessResult access(const Digest& hash, std::int64_t round);

  /// Makes `node` resident, then evicts until within capacity. The returned
  /// ids may include the node just inserted.
  std::vector<std::string> insert(CacheNode node, std::int64_t round);

  std::optional<RetrieveHit> retrieve(std::span<const double> query_embedding,
                                      double threshold) const;

  void update_reputation(const std::string& node_id, double reputation);

  const CacheNode* find(const std::string& node_id) const;
  const CacheNode* find_by_hash(const Digest& hash) const;
  const HistoryEntry* history(const Digest& hash) const;

  std::size_t size() const { return nodes_.size(); }
  std::size_t capacity() const { return config_.capacity; }
  std::uint64_t evictions() const { return evictions_; }
  const CacheConfig& config() const { return config_; }

  /// Resident nodes in node-id order.
  std::vector<const CacheNode*> residents() const;
  double mean_reputation() const;

  /// Id of the node the policy would evict next.
  virtual std::optional<std::string> victim() const = 0;

 protected:
  /// (round, sequence) pair ordering all accesses.
  using Stamp = std::pair<std::int64_t, std::uint64_t>;

  virtual AccessResult on_miss(const Digest& hash, std::int64_t round) = 0;
  virtual void on_hit(CacheNode& node, Stamp stamp) = 0;
  virtual void on_insert(CacheNode& node, Stamp stamp) = 0;
  virtual void on_erase(const CacheNode& node) = 0;
  virtual void on_reputation(CacheNode& node) = 0;

  Stamp next_stamp(std::int64_t round) { return {round, ++sequence_}; }

  CacheConfig config_;
  std::map<std::string, CacheNode> nodes_;
  std::map<Digest, std::string> by_hash_;

 private:
  std::uint64_t sequence_ = 0;
  std::uint64_t evictions_ = 0;
};

/// Priority-oriented cache: k-access admission through a lightweight history
/// queue, eviction of the lowest reputation-weighted priority.
class ProCache final : public KnowledgeCache {
 public:
  explicit ProCache(CacheConfig config) : KnowledgeCache(std::move(config)) {}
  CachePolicy policy() const override { return CachePolicy::PROCache; }
  std::optional<std::string> victim() const override;
  std::size_t history_size() const { return history_.size(); }
  const HistoryEntry* history_entry(const Digest& hash) const;

 private:
  AccessResult on_miss(const Digest& hash, std::int64_t round) override;
  void on_hit(CacheNode& node, Stamp stamp) override;
  void on_insert(CacheNode& node, Stamp stamp) override;
  void on_erase(const CacheNode& node) override;
  void on_reputation(CacheNode& node) override;

  void reindex(CacheNode& node);

  // (priority, last access, node id); begin() is the eviction victim.
  using HeapKey = std::tuple<double, Stamp, std::string>;
  std::set<HeapKey> heap_;
  std::map<std::string, HeapKey> heap_pos_;

  std::map<Digest, HistoryEntry> history_;
  std::deque<Digest> history_order_;
};

/// Least-frequently-used baseline; admits on first access.
class LfuCache final : public KnowledgeCache {
 public:
  explicit LfuCache(CacheConfig config) : KnowledgeCache(std::move(config)) {}
  CachePolicy policy() const override { return CachePolicy::LFU; }
  std::optional<std::string> victim() const override;

 private:
  AccessResult on_miss(const Digest& hash, std::int64_t round) override;
  void on_hit(CacheNode& node, Stamp stamp) override;
  void on_insert(CacheNode& node, Stamp stamp) override;
  void on_erase(const CacheNode& node) override;
  void on_reputation(CacheNode&) override {}

  using Key = std::tuple<std::uint64_t, Stamp, std::string>;
  std::set<Key> order_;
  std::map<std::string, Key> pos_;
};

/// LRU-K baseline; admits on first access. Evicts nodes with fewer than K
/// recorded accesses first (least recent first), then the node whose K-th most
/// recent access is oldest.
class LrukCache final : public KnowledgeCache {
 public:
  explicit LrukCache(CacheConfig config) : KnowledgeCache(std::move(config)) {}
  CachePolicy policy() const override { return CachePolicy::LRUk; }
  std::optional<std::string> victim() const override;

 private:
  AccessResult on_miss(const Digest& hash, std::int64_t round) override;
  void on_hit(CacheNode& node, Stamp stamp) override;
  void on_insert(CacheNode& node, Stamp stamp) override;
  void on_erase(const CacheNode& node) override;
  void on_reputation(CacheNode&) override {}

  void record(const std::string& id, Stamp stamp);

  // (has fewer than K accesses ? 0 : 1, K-th most recent or latest, id)
  using Key = std::tuple<int, Stamp, std::string>;
  std::set<Key> order_;
  std::map<std::string, Key> pos_;
  std::map<std::string, std::deque<Stamp>> accesses_;
};

std::unique_ptr<KnowledgeCache> make_cache(CachePolicy policy, const CacheConfig& config);

}  // namespace blocks
