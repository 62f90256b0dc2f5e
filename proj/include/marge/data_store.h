#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace marge::store {

using nlohmann::json;

// users/<id>/profile style path. Segments are non-empty and contain no '/'.
class DocumentPath {
 public:
  DocumentPath() = default;
  // Throws Error{InvalidPath}.
  explicit DocumentPath(std::vector<std::string> segments);
  static DocumentPath parse(std::string_view text);

  const std::vector<std::string>& segments() const { return segments_; }
  std::string str() const;
  DocumentPath child(std::string segment) const;
  // True if this path equals `other` or is one of its ancestors.
  bool contains(const DocumentPath& other) const;

  bool operator==(const DocumentPath&) const = default;

 private:
  std::vector<std::string> segments_;
};

struct Change {
  DocumentPath path;  // where the write happened
  json value;         // new value there; null when deleted
  std::uint64_t commit_index = 0;
};

namespace detail {
struct SubscriptionQueue {
  DocumentPath path;
  std::mutex mu;
  std::condition_variable cv;
  std::deque<Change> pending;
  bool cancelled = false;
};
}  // namespace detail

// Receives, in commit order, every commit whose path is an ancestor or a
// descendant of the subscribed one. Unsubscribes on destruction.
class Subscription {
 public:
  Subscription() = default;
  explicit Subscription(std::shared_ptr<detail::SubscriptionQueue> q)
      : queue_(std::move(q)) {}
  Subscription(Subscription&&) noexcept = default;
  Subscription& operator=(Subscription&&) noexcept;
  ~Subscription();

  std::optional<Change> next(std::chrono::milliseconds timeout);
  std::optional<Change> try_next();
  std::size_t pending() const;
  void cancel();

 private:
  std::shared_ptr<detail::SubscriptionQueue> queue_;
};

struct StoreOptions {
  // No directory: purely in-memory.
  std::optional<std::filesystem::path> data_dir;
  std::size_t compact_every = 1000;  // journal entries between snapshots
  bool fsync = false;
  // Password hashing cost (libsodium crypto_pwhash). Defaults are the
  // library's interactive limits.
  unsigned long long pwhash_opslimit = 0;
  std::size_t pwhash_memlimit = 0;
};

// Reads MARGE_DATA_DIR into data_dir when set.
StoreOptions options_from_env(StoreOptions base = {});

// Hierarchical JSON tree with read-your-writes semantics. Writing null
// deletes a path. When file-backed, every acknowledged write is in
// journal.jsonl before put()/update_atomic() return; snapshot.json holds
// compacted state. Thread-safe.
class DocumentStore {
 public:
  explicit DocumentStore(StoreOptions options = {});
  ~DocumentStore();
  DocumentStore(const DocumentStore&) = delete;
  DocumentStore& operator=(const DocumentStore&) = delete;

  // Returns the previous value, if any.
  std::optional<json> put(const DocumentPath& path, json value);
  // Throws Error{NotFound}.
  json get(const DocumentPath& path) const;
  std::optional<json> try_get(const DocumentPath& path) const;

  // `transform` receives the current value (null if absent). If it throws,
  // nothing changes and Error{TransformFailed} is raised.
  json update_atomic(const DocumentPath& path,
                     const std::function<json(const json&)>& transform);

  Subscription subscribe(const DocumentPath& path);

  // Throws Error{DuplicateLogin}. Stores only a salted hash of `secret` and
  // initializes users/<user_id>/profile.
  std::string register_user(const std::string& login_id,
                            const std::string& secret);
  std::optional<std::string> verify(const std::string& login_id,
                                    const std::string& secret) const;

  std::uint64_t commit_index() const;
  void flush();
  void compact();

  const StoreOptions& options() const { return options_; }

 private:
  std::optional<json> commit_locked(const DocumentPath& path, json value);
  void journal_locked(const DocumentPath& path, const json& value);
  void compact_locked();
  void recover();
  void notify_locked(const Change& change);

  StoreOptions options_;
  mutable std::mutex mu_;
  json root_ = json::object();
  std::uint64_t commit_index_ = 0;
  std::uint64_t since_snapshot_ = 0;
  int journal_fd_ = -1;
  std::vector<std::weak_ptr<detail::SubscriptionQueue>> subscribers_;
};

// Path-safe key for a login id (hex of its bytes).
std::string login_key(const std::string& login_id);

}  // namespace marge::store
