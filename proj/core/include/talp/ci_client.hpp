#pragma once

/**
 * @file ci_client.hpp
 * @brief Fetches the previous pipeline's artifact archive from a GitLab
 *        compatible server and merges the historical measurement files into
 *        the current experiment tree.
 *
 * Endpoint: GET {base}/api/v4/projects/{id}/jobs/artifacts/{ref}/download?job={name}
 * authenticated with PRIVATE-TOKEN (personal/project token) or JOB-TOKEN
 * (CI_JOB_TOKEN). The token is never written to logs or error messages.
 */

#include <chrono>
#include <filesystem>
#include <functional>
#include <string>
#include <string_view>

namespace talp {

enum class TokenKind { Private, Job };

struct ArtifactSource {
  std::string base_url;  // https://host[:port][/prefix]; a trailing /api/v4 is accepted
  std::string project_id;
  std::string job_name;
  std::string ref;
  std::string token;
  TokenKind token_kind = TokenKind::Private;
};

struct RetryPolicy {
  int attempts = 3;
  std::chrono::milliseconds timeout{30'000};
  std::chrono::milliseconds initial_backoff{1'000};
  int max_redirects = 5;
};

using LogSink = std::function<void(std::string_view)>;

/// Throws std::invalid_argument for non-https URLs on non-loopback hosts or
/// missing fields.
void validate_source(const ArtifactSource& src);

/// Request target (path and query) of the artifacts endpoint.
std::string artifacts_request_path(const ArtifactSource& src);

/// Returns the archive body. Retries 5xx and transport failures with
/// exponential backoff. Throws AuthError (401/403), NotFound (404) or
/// TransportError.
std::string download_artifacts(const ArtifactSource& src, const RetryPolicy& policy = {},
                               const LogSink& log = {});

/// Extracts a zip archive below `dest`, refusing any member whose normalised
/// path escapes it. Nothing is written when a member is rejected. Returns the
/// number of files written. Throws ArchiveError, PathTraversal or IoError.
int extract_archive(std::string_view bytes, const std::filesystem::path& dest);

struct MergeStats {
  int copied = 0;
  int skipped_identical = 0;
  int renamed_conflicts = 0;

  friend bool operator==(const MergeStats&, const MergeStats&) = default;
};

/// Places every "*.json" file under `history_root` at the same relative path
/// under `current_root`. Differing files that collide are kept as
/// "<stem>_hist<n><ext>" with the smallest free n. Idempotent.
MergeStats merge_history(const std::filesystem::path& history_root,
                         const std::filesystem::path& current_root);

}  // namespace talp
