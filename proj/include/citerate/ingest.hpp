#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace citerate::ingest {

struct ClientConfig {
  std::string base_url = "https://api.semanticscholar.org";
  std::string api_key;       // falls back to the S2_API_KEY environment variable
  std::string cache_dir;     // empty disables caching
  std::string source = "sc";
  double rate_per_sec = 1.0;
  int page_size = 1000;
  int max_retries = 5;       // exponential backoff on HTTP 429
  int timeout_sec = 30;
};

struct CitationFetchResult {
  std::string paper_id;
  std::string source;
  std::map<int, long> counts_by_year;  // calendar year -> citing papers
  long unknown_year = 0;               // citing papers with a null year
  long total = 0;                      // all citing records returned
  std::string fetched_at;              // ISO-8601 UTC
};

/// One JSON document per paper id under {cache_dir}/{source}/{paper_id}.json,
/// written atomically (temp file + rename).  Corrupt entries are skipped with
/// a warning, never a crash.
std::string cache_store(const std::string& cache_dir, const CitationFetchResult& result);
std::optional<CitationFetchResult> cache_lookup(const std::string& cache_dir,
                                                const std::string& source,
                                                const std::string& paper_id,
                                                std::string* warning = nullptr);

/// Pages through the scholarly-graph citation endpoint
/// (`/graph/v1/paper/{id}/citations?fields=year` with limit/offset) and
/// aggregates citing-paper years.  Results are cached before return; cached
/// ids are served without network activity.
class CitationClient {
 public:
  explicit CitationClient(ClientConfig cfg);

  CitationFetchResult fetch_citations_by_year(const std::string& paper_id);

  long requests_made() const { return requests_made_; }

 private:
  CitationFetchResult fetch_remote(const std::string& paper_id);
  void throttle();

  ClientConfig cfg_;
  long requests_made_ = 0;
  double last_request_time_ = -1.0;  // seconds on a steady clock
};

/// Calendar-year counts mapped to relative years t = year - pub_year;
/// citations outside [0, horizon) (including pre-publication glitches) are
/// dropped and counted.
struct RelativeYearCounts {
  std::vector<long> counts;
  long dropped = 0;
};
RelativeYearCounts to_relative_years(const CitationFetchResult& result, int pub_year,
                                     int horizon);

}  // namespace citerate::ingest
