#include "talp/ci_client.hpp"

#include <algorithm>
#include <optional>
#include <stdexcept>
#include <thread>
#include <vector>

#include <fmt/format.h>
#include <httplib.h>

#include "io_util.hpp"
#include "talp/errors.hpp"
#include "talp/zip.hpp"

namespace talp {
namespace fs = std::filesystem;

namespace {

struct Url {
  std::string scheme;
  std::string host;
  int port = 0;
  std::string path;  // without trailing slash, may be empty

  std::string origin() const {
    const bool ipv6 = host.find(':') != std::string::npos;
    return fmt::format("{}://{}{}{}:{}", scheme, ipv6 ? "[" : "", host, ipv6 ? "]" : "", port);
  }
};

std::optional<Url> parse_url(std::string_view text) {
  Url url;
  const std::size_t sep = text.find("://");
  if (sep == std::string_view::npos) return std::nullopt;
  url.scheme = std::string(text.substr(0, sep));
  std::transform(url.scheme.begin(), url.scheme.end(), url.scheme.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (url.scheme != "http" && url.scheme != "https") return std::nullopt;
  std::string_view rest = text.substr(sep + 3);
  const std::size_t slash = rest.find('/');
  std::string_view authority = rest.substr(0, slash);
  url.path = slash == std::string_view::npos ? "" : std::string(rest.substr(slash));
  while (!url.path.empty() && url.path.back() == '/') url.path.pop_back();
  if (authority.find('@') != std::string_view::npos) return std::nullopt;

  std::string_view port_text;
  if (!authority.empty() && authority.front() == '[') {
    const std::size_t close = authority.find(']');
    if (close == std::string_view::npos) return std::nullopt;
    url.host = std::string(authority.substr(1, close - 1));
    if (close + 1 < authority.size()) {
      if (authority[close + 1] != ':') return std::nullopt;
      port_text = authority.substr(close + 2);
    }
  } else {
    const std::size_t colon = authority.find(':');
    url.host = std::string(authority.substr(0, colon));
    if (colon != std::string_view::npos) port_text = authority.substr(colon + 1);
  }
  if (url.host.empty()) return std::nullopt;
  if (port_text.empty()) {
    url.port = url.scheme == "https" ? 443 : 80;
  } else {
    try {
      url.port = std::stoi(std::string(port_text));
    } catch (const std::exception&) {
      return std::nullopt;
    }
    if (url.port < 1 || url.port > 65535) return std::nullopt;
  }
  return url;
}

bool is_loopback(std::string_view host) {
  return host == "localhost" || host == "::1" || host.starts_with("127.");
}

std::string percent_encode(std::string_view s) {
  std::string out;
  for (unsigned char c : s) {
    if (std::isalnum(c) || c == '-' || c == '_' || c == '.' || c == '~') {
      out += static_cast<char>(c);
    } else {
      out += fmt::format("%{:02X}", c);
    }
  }
  return out;
}

Url checked_url(const ArtifactSource& src) {
  auto url = parse_url(src.base_url);
  if (!url) throw std::invalid_argument(fmt::format("invalid GitLab URL '{}'", src.base_url));
  if (url->scheme != "https" && !is_loopback(url->host)) {
    throw std::invalid_argument(
        fmt::format("refusing plain http for non-loopback host '{}'", url->host));
  }
  return *url;
}

bool is_redirect(int status) {
  return status == 301 || status == 302 || status == 303 || status == 307 || status == 308;
}

struct Outcome {
  std::optional<httplib::Response> response;
  std::string transport_error;
};

}  // namespace

void validate_source(const ArtifactSource& src) {
  checked_url(src);
  if (src.project_id.empty()) throw std::invalid_argument("project id is required");
  if (src.job_name.empty()) throw std::invalid_argument("job name is required");
  if (src.ref.empty()) throw std::invalid_argument("ref is required");
}

std::string artifacts_request_path(const ArtifactSource& src) {
  const Url url = checked_url(src);
  std::string prefix = url.path;
  if (!prefix.ends_with("/api/v4")) prefix += "/api/v4";
  return fmt::format("{}/projects/{}/jobs/artifacts/{}/download?job={}", prefix,
                     percent_encode(src.project_id), percent_encode(src.ref),
                     percent_encode(src.job_name));
}

std::string download_artifacts(const ArtifactSource& src, const RetryPolicy& policy,
                               const LogSink& log) {
  validate_source(src);
  const Url base = checked_url(src);
  const std::string initial_path = artifacts_request_path(src);
  const auto say = [&](const std::string& message) {
    if (log) log(message);
  };

  // One attempt follows redirects manually so the token is dropped whenever
  // the origin changes (artifact storage is often on another host).
  const auto attempt = [&]() -> Outcome {
    Url target = base;
    std::string path = initial_path;
    bool send_token = !src.token.empty();
    for (int hop = 0; hop <= policy.max_redirects; ++hop) {
      httplib::Client client(target.origin());
      const auto secs = std::chrono::duration_cast<std::chrono::seconds>(policy.timeout);
      const auto usecs =
          std::chrono::duration_cast<std::chrono::microseconds>(policy.timeout - secs);
      client.set_connection_timeout(secs.count(), usecs.count());
      client.set_read_timeout(secs.count(), usecs.count());
      client.set_write_timeout(secs.count(), usecs.count());
      client.set_follow_location(false);

      httplib::Headers headers;
      if (send_token) {
        headers.emplace(src.token_kind == TokenKind::Private ? "PRIVATE-TOKEN" : "JOB-TOKEN",
                        src.token);
      }
      auto res = client.Get(path, headers);
      if (!res) return {std::nullopt, httplib::to_string(res.error())};
      if (!is_redirect(res->status)) return {*res, {}};

      const std::string location = res->get_header_value("Location");
      if (location.empty()) return {*res, {}};
      if (location.front() == '/') {
        path = location;
      } else {
        auto next = parse_url(location);
        if (!next) return {std::nullopt, "redirect to an invalid location"};
        if (next->origin() != target.origin()) send_token = false;
        const std::size_t p = location.find('/', location.find("://") + 3);
        path = p == std::string::npos ? "/" : location.substr(p);
        target = *next;
      }
    }
    return {std::nullopt, fmt::format("more than {} redirects", policy.max_redirects)};
  };

  std::string last_error;
  for (int i = 0; i < policy.attempts; ++i) {
    if (i > 0) {
      const auto delay = policy.initial_backoff * (1 << (i - 1));
      say(fmt::format("retrying artifact download in {} ms ({})", delay.count(), last_error));
      std::this_thread::sleep_for(delay);
    }
    Outcome out = attempt();
    if (!out.response) {
      last_error = out.transport_error;
      continue;
    }
    const int status = out.response->status;
    if (status >= 200 && status < 300) return std::move(out.response->body);
    if (status == 401 || status == 403) {
      throw AuthError(fmt::format("artifact download rejected with HTTP {} (check the token)", status));
    }
    if (status == 404) {
      throw NotFound(fmt::format("no artifacts for job '{}' on ref '{}'", src.job_name, src.ref));
    }
    last_error = fmt::format("HTTP {}", status);
    if (status < 500) break;
  }
  throw TransportError(fmt::format("artifact download from {} failed: {}", base.origin(),
                                   last_error.empty() ? "unknown error" : last_error));
}

int extract_archive(std::string_view bytes, const fs::path& dest) {
  const std::vector<ZipEntry> entries = read_zip(bytes);

  std::vector<std::pair<fs::path, const ZipEntry*>> plan;
  for (const ZipEntry& e : entries) {
    const fs::path rel = fs::path(e.name).lexically_normal();
    const bool escapes = e.name.empty() || rel.is_absolute() || rel.has_root_name() ||
                         e.name.front() == '/' || e.name.find('\\') != std::string::npos ||
                         (!rel.empty() && *rel.begin() == "..");
    if (escapes) throw PathTraversal(fmt::format("archive member '{}' escapes the destination", e.name));
    plan.emplace_back(dest / rel, &e);
  }

  int written = 0;
  for (const auto& [path, entry] : plan) {
    if (entry->name.back() == '/') {
      std::error_code ec;
      fs::create_directories(path, ec);
      if (ec) throw IoError(fmt::format("cannot create '{}': {}", path.string(), ec.message()));
      continue;
    }
    write_file(path, entry->data);
    ++written;
  }
  return written;
}

namespace {

fs::path hist_candidate(const fs::path& dest, int n) {
  return dest.parent_path() /
         fmt::format("{}_hist{}{}", dest.stem().string(), n, dest.extension().string());
}

}  // namespace

MergeStats merge_history(const fs::path& history_root, const fs::path& current_root) {
  std::error_code ec;
  if (!fs::is_directory(history_root, ec)) {
    throw IoError(fmt::format("history directory '{}' does not exist", history_root.string()));
  }
  if (!fs::is_directory(current_root, ec)) {
    throw IoError(fmt::format("target directory '{}' does not exist", current_root.string()));
  }

  std::vector<fs::path> files;
  for (fs::recursive_directory_iterator it(history_root), end; it != end; ++it) {
    if (it->is_regular_file() && it->path().extension() == ".json") files.push_back(it->path());
  }
  std::sort(files.begin(), files.end());

  MergeStats stats;
  for (const fs::path& file : files) {
    const std::string content = read_file(file);
    const fs::path dest = current_root / file.lexically_relative(history_root);
    if (!fs::exists(dest)) {
      write_file(dest, content);
      ++stats.copied;
      continue;
    }
    if (read_file(dest) == content) {
      ++stats.skipped_identical;
      continue;
    }
    // A previous merge may already have stored this file under a _hist name.
    bool stored = false;
    int n = 1;
    for (;; ++n) {
      const fs::path candidate = hist_candidate(dest, n);
      if (!fs::exists(candidate)) break;
      if (read_file(candidate) == content) {
        stored = true;
        break;
      }
    }
    if (stored) {
      ++stats.skipped_identical;
      continue;
    }
    write_file(hist_candidate(dest, n), content);
    ++stats.renamed_conflicts;
  }
  return stats;
}

}  // namespace talp
