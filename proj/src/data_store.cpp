#include "marge/data_store.h"

#include <fcntl.h>
#include <sodium.h>
#include <unistd.h>

#include <cerrno>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <sstream>

#include "marge/error.h"

namespace marge::store {

namespace fs = std::filesystem;

DocumentPath::DocumentPath(std::vector<std::string> segments)
    : segments_(std::move(segments)) {
  if (segments_.empty()) throw Error(ErrorCode::InvalidPath, "empty path");
  for (const auto& s : segments_) {
    if (s.empty() || s.find('/') != std::string::npos) {
      throw Error(ErrorCode::InvalidPath, "invalid path segment '" + s + "'");
    }
  }
}

DocumentPath DocumentPath::parse(std::string_view text) {
  std::vector<std::string> segments;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto slash = text.find('/', start);
    const auto end = slash == std::string_view::npos ? text.size() : slash;
    segments.emplace_back(text.substr(start, end - start));
    if (slash == std::string_view::npos) break;
    start = slash + 1;
  }
  return DocumentPath(std::move(segments));
}

std::string DocumentPath::str() const {
  std::string out;
  for (const auto& s : segments_) {
    if (!out.empty()) out += '/';
    out += s;
  }
  return out;
}

DocumentPath DocumentPath::child(std::string segment) const {
  auto segments = segments_;
  segments.push_back(std::move(segment));
  return DocumentPath(std::move(segments));
}

bool DocumentPath::contains(const DocumentPath& other) const {
  if (segments_.size() > other.segments_.size()) return false;
  return std::equal(segments_.begin(), segments_.end(), other.segments_.begin());
}

Subscription& Subscription::operator=(Subscription&& other) noexcept {
  if (this != &other) {
    cancel();
    queue_ = std::move(other.queue_);
  }
  return *this;
}

Subscription::~Subscription() { cancel(); }

void Subscription::cancel() {
  if (!queue_) return;
  {
    std::lock_guard lock(queue_->mu);
    queue_->cancelled = true;
    queue_->pending.clear();
  }
  queue_->cv.notify_all();
  queue_.reset();
}

std::optional<Change> Subscription::next(std::chrono::milliseconds timeout) {
  if (!queue_) return std::nullopt;
  std::unique_lock lock(queue_->mu);
  queue_->cv.wait_for(lock, timeout, [&] {
    return !queue_->pending.empty() || queue_->cancelled;
  });
  if (queue_->pending.empty()) return std::nullopt;
  Change c = std::move(queue_->pending.front());
  queue_->pending.pop_front();
  return c;
}

std::optional<Change> Subscription::try_next() {
  return next(std::chrono::milliseconds(0));
}

std::size_t Subscription::pending() const {
  if (!queue_) return 0;
  std::lock_guard lock(queue_->mu);
  return queue_->pending.size();
}

StoreOptions options_from_env(StoreOptions base) {
  if (const char* dir = std::getenv("MARGE_DATA_DIR"); dir && *dir) {
    base.data_dir = fs::path(dir);
  }
  return base;
}

std::string login_key(const std::string& login_id) {
  std::string out(login_id.size() * 2 + 1, '\0');
  sodium_bin2hex(out.data(), out.size(),
                 reinterpret_cast<const unsigned char*>(login_id.data()),
                 login_id.size());
  out.pop_back();
  return out;
}

namespace {

const json* find_node(const json& root, const DocumentPath& path) {
  const json* node = &root;
  for (const auto& seg : path.segments()) {
    if (!node->is_object()) return nullptr;
    const auto it = node->find(seg);
    if (it == node->end()) return nullptr;
    node = &*it;
  }
  return node;
}

// Removes the value at `path`, then any parents left as empty objects.
void erase_path(json& root, const std::vector<std::string>& segs, std::size_t depth) {
  if (!root.is_object()) return;
  const auto it = root.find(segs[depth]);
  if (it == root.end()) return;
  if (depth + 1 == segs.size()) {
    root.erase(it);
    return;
  }
  erase_path(*it, segs, depth + 1);
  if (it->is_object() && it->empty()) root.erase(it);
}

void set_path(json& root, const std::vector<std::string>& segs, json value) {
  json* node = &root;
  for (std::size_t i = 0; i + 1 < segs.size(); ++i) {
    json& next = (*node)[segs[i]];
    if (!next.is_object()) next = json::object();
    node = &next;
  }
  (*node)[segs.back()] = std::move(value);
}

void ensure_sodium() {
  static const bool ok = sodium_init() >= 0;
  if (!ok) throw std::runtime_error("libsodium initialization failed");
}

}  // namespace

DocumentStore::DocumentStore(StoreOptions options) : options_(std::move(options)) {
  ensure_sodium();
  if (options_.pwhash_opslimit == 0) {
    options_.pwhash_opslimit = crypto_pwhash_OPSLIMIT_INTERACTIVE;
  }
  if (options_.pwhash_memlimit == 0) {
    options_.pwhash_memlimit = crypto_pwhash_MEMLIMIT_INTERACTIVE;
  }
  if (options_.data_dir) recover();
}

DocumentStore::~DocumentStore() {
  if (journal_fd_ >= 0) ::close(journal_fd_);
}

void DocumentStore::recover() {
  const fs::path dir = *options_.data_dir;
  fs::create_directories(dir);

  if (std::ifstream snap(dir / "snapshot.json"); snap) {
    const json doc = json::parse(snap);
    root_ = doc.at("tree");
    commit_index_ = doc.at("commit_index").get<std::uint64_t>();
  }

  const fs::path journal_path = dir / "journal.jsonl";
  std::uintmax_t valid_bytes = 0;
  if (std::ifstream in(journal_path, std::ios::binary); in) {
    std::string line;
    while (std::getline(in, line)) {
      if (in.eof()) break;  // no trailing newline: torn write
      json entry;
      try {
        entry = json::parse(line);
      } catch (const json::parse_error&) {
        break;
      }
      valid_bytes += line.size() + 1;
      const auto index = entry.at("i").get<std::uint64_t>();
      if (index <= commit_index_) continue;
      const auto path = DocumentPath::parse(entry.at("path").get<std::string>());
      json value = entry.at("value");
      if (value.is_null()) {
        erase_path(root_, path.segments(), 0);
      } else {
        set_path(root_, path.segments(), std::move(value));
      }
      commit_index_ = index;
      ++since_snapshot_;
    }
  }
  if (fs::exists(journal_path) && fs::file_size(journal_path) != valid_bytes) {
    fs::resize_file(journal_path, valid_bytes);
  }

  journal_fd_ = ::open(journal_path.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
  if (journal_fd_ < 0) {
    throw std::runtime_error("cannot open journal " + journal_path.string() +
                             ": " + std::strerror(errno));
  }
}

void DocumentStore::journal_locked(const DocumentPath& path, const json& value) {
  if (journal_fd_ < 0) return;
  json entry{{"i", commit_index_}, {"path", path.str()}, {"value", value}};
  std::string line = entry.dump() + '\n';
  const char* data = line.data();
  std::size_t left = line.size();
  while (left > 0) {
    const auto n = ::write(journal_fd_, data, left);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw std::runtime_error(std::string("journal write failed: ") +
                               std::strerror(errno));
    }
    data += n;
    left -= static_cast<std::size_t>(n);
  }
  if (options_.fsync) ::fsync(journal_fd_);
}

void DocumentStore::compact_locked() {
  if (!options_.data_dir) return;
  const fs::path dir = *options_.data_dir;
  const fs::path tmp = dir / "snapshot.json.tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    out << json{{"commit_index", commit_index_}, {"tree", root_}}.dump();
    out.flush();
    if (!out) throw std::runtime_error("snapshot write failed");
  }
  fs::rename(tmp, dir / "snapshot.json");
  // Entries up to commit_index_ are now in the snapshot; a crash before the
  // truncate only leaves entries that recovery skips.
  if (::ftruncate(journal_fd_, 0) != 0) {
    throw std::runtime_error("journal truncate failed");
  }
  since_snapshot_ = 0;
}

void DocumentStore::notify_locked(const Change& change) {
  std::erase_if(subscribers_, [&](const auto& weak) {
    const auto q = weak.lock();
    if (!q) return true;
    if (!q->path.contains(change.path) && !change.path.contains(q->path)) {
      return false;
    }
    {
      std::lock_guard lock(q->mu);
      if (q->cancelled) return true;
      q->pending.push_back(change);
    }
    q->cv.notify_one();
    return false;
  });
}

std::optional<json> DocumentStore::commit_locked(const DocumentPath& path,
                                                 json value) {
  std::optional<json> previous;
  if (const json* node = find_node(root_, path)) previous.emplace(*node);

  ++commit_index_;
  journal_locked(path, value);
  if (value.is_null()) {
    erase_path(root_, path.segments(), 0);
  } else {
    set_path(root_, path.segments(), value);
  }
  if (journal_fd_ >= 0 && ++since_snapshot_ >= options_.compact_every) {
    compact_locked();
  }
  notify_locked(Change{path, std::move(value), commit_index_});
  return previous;
}

std::optional<json> DocumentStore::put(const DocumentPath& path, json value) {
  std::lock_guard lock(mu_);
  return commit_locked(path, std::move(value));
}

std::optional<json> DocumentStore::try_get(const DocumentPath& path) const {
  std::lock_guard lock(mu_);
  if (const json* node = find_node(root_, path)) return std::optional<json>(std::in_place, *node);
  return std::nullopt;
}

json DocumentStore::get(const DocumentPath& path) const {
  auto value = try_get(path);
  if (!value) throw Error(ErrorCode::NotFound, "no document at '" + path.str() + "'");
  return std::move(*value);
}

json DocumentStore::update_atomic(const DocumentPath& path,
                                  const std::function<json(const json&)>& transform) {
  std::lock_guard lock(mu_);
  const json* node = find_node(root_, path);
  const json current = node ? *node : json();
  json next;
  try {
    next = transform(current);
  } catch (const std::exception& e) {
    throw Error(ErrorCode::TransformFailed,
                "transform at '" + path.str() + "' failed: " + e.what());
  } catch (...) {
    throw Error(ErrorCode::TransformFailed, "transform at '" + path.str() + "' failed");
  }
  commit_locked(path, next);
  return next;
}

Subscription DocumentStore::subscribe(const DocumentPath& path) {
  auto q = std::make_shared<detail::SubscriptionQueue>();
  q->path = path;
  std::lock_guard lock(mu_);
  subscribers_.push_back(q);
  return Subscription(std::move(q));
}

std::string DocumentStore::register_user(const std::string& login_id,
                                         const std::string& secret) {
  if (login_id.empty() || secret.empty()) {
    throw Error(ErrorCode::BadRequest, "login id and secret must be non-empty");
  }
  char hash[crypto_pwhash_STRBYTES];
  if (crypto_pwhash_str(hash, secret.data(), secret.size(),
                        options_.pwhash_opslimit, options_.pwhash_memlimit) != 0) {
    throw std::runtime_error("password hashing ran out of memory");
  }
  unsigned char raw[16];
  randombytes_buf(raw, sizeof raw);
  char hex[sizeof raw * 2 + 1];
  sodium_bin2hex(hex, sizeof hex, raw, sizeof raw);
  const std::string user_id = std::string("u") + hex;

  const auto login_path = DocumentPath({"auth", "logins", login_key(login_id)});
  std::lock_guard lock(mu_);
  if (find_node(root_, login_path)) {
    throw Error(ErrorCode::DuplicateLogin, "login '" + login_id + "' is taken");
  }
  commit_locked(login_path, {{"login_id", login_id},
                             {"user_id", user_id},
                             {"secret_hash", std::string(hash)}});
  commit_locked(DocumentPath({"users", user_id, "profile"}),
                {{"user_id", user_id}, {"login_id", login_id}});
  return user_id;
}

std::optional<std::string> DocumentStore::verify(const std::string& login_id,
                                                 const std::string& secret) const {
  if (login_id.empty()) return std::nullopt;
  const auto entry =
      try_get(DocumentPath({"auth", "logins", login_key(login_id)}));
  if (!entry) return std::nullopt;
  const auto hash = entry->at("secret_hash").get<std::string>();
  if (crypto_pwhash_str_verify(hash.c_str(), secret.data(), secret.size()) != 0) {
    return std::nullopt;
  }
  return entry->at("user_id").get<std::string>();
}

std::uint64_t DocumentStore::commit_index() const {
  std::lock_guard lock(mu_);
  return commit_index_;
}

void DocumentStore::flush() {
  std::lock_guard lock(mu_);
  if (journal_fd_ >= 0) ::fsync(journal_fd_);
}

void DocumentStore::compact() {
  std::lock_guard lock(mu_);
  compact_locked();
}

}  // namespace marge::store
