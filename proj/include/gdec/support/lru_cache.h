/*!
 * \file gdec/support/lru_cache.h
 * \brief Bounded LRU map, safe under concurrent readers/writers.
 *
 * Values are handed out as shared_ptr so an entry can be evicted while a
 * caller still holds the result. The cache's only observable effect is
 * latency; correctness never depends on hit/miss behavior.
 */
#pragma once

#include <atomic>
#include <cstdint>
#include <list>
#include <memory>
#include <mutex>
#include <unordered_map>

namespace gdec {

template <typename Key, typename Value>
class LruCache {
 public:
  /// capacity == 0 disables the cache; capacity < 0 means unbounded.
  explicit LruCache(int64_t capacity) : capacity_(capacity) {}

  std::shared_ptr<const Value> get(const Key& key) {
    if (capacity_ == 0) {
      misses_.fetch_add(1, std::memory_order_relaxed);
      return nullptr;
    }
    std::lock_guard<std::mutex> lock(mu_);
    auto it = map_.find(key);
    if (it == map_.end()) {
      misses_.fetch_add(1, std::memory_order_relaxed);
      return nullptr;
    }
    order_.splice(order_.begin(), order_, it->second.second);
    hits_.fetch_add(1, std::memory_order_relaxed);
    return it->second.first;
  }

  void put(const Key& key, std::shared_ptr<const Value> value) {
    if (capacity_ == 0) return;
    std::lock_guard<std::mutex> lock(mu_);
    auto it = map_.find(key);
    if (it != map_.end()) {
      it->second.first = std::move(value);
      order_.splice(order_.begin(), order_, it->second.second);
      return;
    }
    order_.push_front(key);
    map_.emplace(key, std::make_pair(std::move(value), order_.begin()));
    if (capacity_ > 0 && map_.size() > static_cast<size_t>(capacity_)) {
      map_.erase(order_.back());
      order_.pop_back();
    }
  }

  size_t size() const {
    std::lock_guard<std::mutex> lock(mu_);
    return map_.size();
  }

  uint64_t hits() const { return hits_.load(std::memory_order_relaxed); }
  uint64_t misses() const { return misses_.load(std::memory_order_relaxed); }

 private:
  int64_t capacity_;
  mutable std::mutex mu_;
  std::list<Key> order_;  // most recent first
  std::unordered_map<Key, std::pair<std::shared_ptr<const Value>, typename std::list<Key>::iterator>>
      map_;
  std::atomic<uint64_t> hits_{0};
  std::atomic<uint64_t> misses_{0};
};

}  // namespace gdec
