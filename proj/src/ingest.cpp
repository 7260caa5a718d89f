#include "citerate/ingest.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "citerate/errors.hpp"

namespace citerate::ingest {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string sanitize_id(const std::string& id) {
  std::string out;
  out.reserve(id.size());
  for (char c : id) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                    (c >= '0' && c <= '9') || c == '.' || c == '-' || c == '_';
    out += ok ? c : '_';
  }
  return out.empty() ? "_" : out;
}

std::string utc_now() {
  const std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

json to_json(const CitationFetchResult& r) {
  json counts = json::object();
  for (const auto& [year, n] : r.counts_by_year) counts[std::to_string(year)] = n;
  return json{{"paper_id", r.paper_id},
              {"source", r.source},
              {"counts_by_year", counts},
              {"unknown_year", r.unknown_year},
              {"total", r.total},
              {"fetched_at", r.fetched_at}};
}

CitationFetchResult from_json(const json& j) {
  CitationFetchResult r;
  r.paper_id = j.at("paper_id").get<std::string>();
  r.source = j.at("source").get<std::string>();
  for (const auto& [key, value] : j.at("counts_by_year").items())
    r.counts_by_year[std::stoi(key)] = value.get<long>();
  r.unknown_year = j.at("unknown_year").get<long>();
  r.total = j.at("total").get<long>();
  r.fetched_at = j.value("fetched_at", "");
  return r;
}

}  // namespace

std::string cache_store(const std::string& cache_dir, const CitationFetchResult& result) {
  const fs::path dir = fs::path(cache_dir) / result.source;
  fs::create_directories(dir);
  const fs::path path = dir / (sanitize_id(result.paper_id) + ".json");
  const fs::path tmp = dir / (sanitize_id(result.paper_id) + ".json.tmp" +
                              std::to_string(static_cast<long>(::getpid())));
  {
    std::ofstream out(tmp);
    if (!out) throw data_error("cache_store: cannot open '" + tmp.string() + "'");
    out << to_json(result).dump() << '\n';
    if (!out) throw data_error("cache_store: write failed for '" + tmp.string() + "'");
  }
  fs::rename(tmp, path);  // atomic replace on POSIX
  return path.string();
}

std::optional<CitationFetchResult> cache_lookup(const std::string& cache_dir,
                                                const std::string& source,
                                                const std::string& paper_id,
                                                std::string* warning) {
  const fs::path path = fs::path(cache_dir) / source / (sanitize_id(paper_id) + ".json");
  std::ifstream in(path);
  if (!in) return std::nullopt;
  try {
    json j;
    in >> j;
    CitationFetchResult r = from_json(j);
    // Exact match on (source, paper_id); a sanitized-name collision must miss.
    if (r.paper_id != paper_id || r.source != source) return std::nullopt;
    return r;
  } catch (const std::exception& e) {
    if (warning)
      *warning = "corrupt cache entry '" + path.string() + "' skipped: " + e.what();
    return std::nullopt;
  }
}

CitationClient::CitationClient(ClientConfig cfg) : cfg_(std::move(cfg)) {
  if (cfg_.api_key.empty()) {
    if (const char* env = std::getenv("S2_API_KEY")) cfg_.api_key = env;
  }
}

void CitationClient::throttle() {
  if (cfg_.rate_per_sec <= 0.0) return;
  using clock = std::chrono::steady_clock;
  const double now =
      std::chrono::duration<double>(clock::now().time_since_epoch()).count();
  const double min_gap = 1.0 / cfg_.rate_per_sec;
  if (last_request_time_ >= 0.0 && now - last_request_time_ < min_gap) {
    std::this_thread::sleep_for(
        std::chrono::duration<double>(min_gap - (now - last_request_time_)));
  }
  last_request_time_ =
      std::chrono::duration<double>(clock::now().time_since_epoch()).count();
}

CitationFetchResult CitationClient::fetch_remote(const std::string& paper_id) {
  httplib::Client client(cfg_.base_url);
  client.set_connection_timeout(cfg_.timeout_sec);
  client.set_read_timeout(cfg_.timeout_sec);
  httplib::Headers headers;
  if (!cfg_.api_key.empty()) headers.emplace("x-api-key", cfg_.api_key);

  CitationFetchResult result;
  result.paper_id = paper_id;
  result.source = cfg_.source;

  long offset = 0;
  for (;;) {
    const std::string path = "/graph/v1/paper/" + paper_id +
                             "/citations?fields=year&limit=" +
                             std::to_string(cfg_.page_size) +
                             "&offset=" + std::to_string(offset);
    httplib::Result res;
    int attempt = 0;
    for (;;) {
      throttle();
      ++requests_made_;
      res = client.Get(path, headers);
      if (res && res->status == 429) {
        if (++attempt > cfg_.max_retries)
          throw ingest_error("rate limited fetching '" + paper_id + "': " +
                             std::to_string(cfg_.max_retries) + " retries exhausted");
        const int delay_ms = std::min(250 * (1 << (attempt - 1)), 4000);
        std::this_thread::sleep_for(std::chrono::milliseconds(delay_ms));
        continue;
      }
      break;
    }
    if (!res)
      throw ingest_error("network failure fetching '" + paper_id + "': " +
                         httplib::to_string(res.error()));
    if (res->status == 404) throw ingest_error("paper id not found: '" + paper_id + "'");
    if (res->status != 200)
      throw ingest_error("HTTP " + std::to_string(res->status) + " fetching '" + paper_id +
                         "'");

    json body;
    try {
      body = json::parse(res->body);
    } catch (const std::exception& e) {
      throw ingest_error("bad JSON for '" + paper_id + "': " + e.what());
    }
    const auto& data = body.at("data");
    for (const auto& item : data) {
      ++result.total;
      const auto& citing = item.at("citingPaper");
      if (citing.contains("year") && !citing["year"].is_null()) {
        ++result.counts_by_year[citing["year"].get<int>()];
      } else {
        ++result.unknown_year;
      }
    }
    if (body.contains("next") && !body["next"].is_null() &&
        static_cast<long>(data.size()) == cfg_.page_size) {
      offset = body["next"].get<long>();
    } else {
      break;
    }
  }
  result.fetched_at = utc_now();
  return result;
}

CitationFetchResult CitationClient::fetch_citations_by_year(const std::string& paper_id) {
  if (!cfg_.cache_dir.empty()) {
    std::string warning;
    if (auto hit = cache_lookup(cfg_.cache_dir, cfg_.source, paper_id, &warning)) return *hit;
    if (!warning.empty()) std::cerr << "warning: " << warning << '\n';
  }
  CitationFetchResult result = fetch_remote(paper_id);
  if (!cfg_.cache_dir.empty()) cache_store(cfg_.cache_dir, result);
  return result;
}

RelativeYearCounts to_relative_years(const CitationFetchResult& result, int pub_year,
                                     int horizon) {
  RelativeYearCounts out;
  out.counts.assign(horizon, 0);
  for (const auto& [year, n] : result.counts_by_year) {
    const int t = year - pub_year;
    if (t < 0 || t >= horizon) {
      out.dropped += n;
      continue;
    }
    out.counts[t] += n;
  }
  return out;
}

}  // namespace citerate::ingest
