#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "threatrank/common/digest.hpp"
#include "threatrank/common/time.hpp"
#include "threatrank/core/types.hpp"
#include "threatrank/knowledge/attack_catalog.hpp"

namespace threatrank::knowledge {

using json = nlohmann::json;

struct StoreError : std::runtime_error {
  explicit StoreError(const std::string& what) : std::runtime_error(what) {}
};
struct MalformedId : StoreError {
  explicit MalformedId(const std::string& what) : StoreError(what) {}
};
struct SourceUnavailable : StoreError {
  explicit SourceUnavailable(const std::string& what) : StoreError(what) {}
};
struct NoSnapshotLoaded : StoreError {
  explicit NoSnapshotLoaded(const std::string& what) : StoreError(what) {}
};

// ---------------------------------------------------------------------------
// Network accounting. Fixture mode must perform zero network operations; the
// test suite engages the guard and asserts the counter stays put.
// ---------------------------------------------------------------------------

inline std::atomic<std::uint64_t>& network_operations() {
  static std::atomic<std::uint64_t> count{0};
  return count;
}

inline std::atomic<bool>& network_forbidden() {
  static std::atomic<bool> flag{false};
  return flag;
}

inline void count_network_operation(const std::string& what) {
  if (network_forbidden().load())
    throw SourceUnavailable("network operation attempted while forbidden: " + what);
  network_operations().fetch_add(1);
}

// ---------------------------------------------------------------------------
// Source records
// ---------------------------------------------------------------------------

enum class CveStatus { published, reserved, disputed, rejected };

inline std::string to_string(CveStatus s) {
  switch (s) {
    case CveStatus::published: return "published";
    case CveStatus::reserved: return "reserved";
    case CveStatus::disputed: return "disputed";
    case CveStatus::rejected: return "rejected";
  }
  return "published";
}

struct CveRecord {
  std::string cve_id;
  std::string description;
  std::optional<std::string> cvss_vector;
  UtcTime published{};
  UtcTime last_modified{};
  CveStatus status = CveStatus::published;
  std::vector<std::string> references;
};

struct KevEntry {
  std::string cve_id;
  UtcTime date_added{};
  std::optional<UtcTime> due_date;
  std::string notes;
};

struct EpssSnapshot {
  std::string cve_id;
  double probability = 0.0;
  double percentile = 0.0;
  UtcTime snapshot_date{};
};

// Enrichment context normalized from advisories (the feed has no single
// schema; fixtures carry pre-normalized JSON).
struct AdvisoryContext {
  std::string channel;
  std::string type;
  bool patch_available = false;
  std::vector<AffectedSystem> affected_systems;
  std::string exploitation_claim;  // "", "in-wild", "none"
};

enum class Origin { cache, fixture, live, absent };

struct ProvenanceRecord {
  std::string source;
  std::string key;
  Origin origin = Origin::absent;
};

struct StoreConfig {
  std::filesystem::path fixture_dir;
  std::filesystem::path cache_dir;
  bool offline = true;
  std::optional<UtcTime> as_of;  // no record timestamped later is served
  bool enable_virustotal = false;
  // Injected live fetcher (url -> body); absent means live lookups fail with
  // SourceUnavailable. Keeps HTTP plumbing out of this header and lets tests
  // guard the network boundary.
  std::function<std::optional<std::string>(const std::string& url)> fetcher;
  std::string nvd_base_url = "https://services.nvd.nist.gov/rest/json/cves/2.0";
  std::string kev_url =
      "https://www.cisa.gov/sites/default/files/feeds/known_exploited_vulnerabilities.json";
  // Minimum spacing between live requests to one source (NVD asks for ~6s
  // without an API key).
  double live_min_interval_seconds = 6.0;
};

// ---------------------------------------------------------------------------
// Store
// ---------------------------------------------------------------------------

class KnowledgeStore {
 public:
  explicit KnowledgeStore(StoreConfig config) : cfg_(std::move(config)) {}

  const StoreConfig& config() const { return cfg_; }

  // --- CVE records ---------------------------------------------------------

  std::optional<CveRecord> lookup_cve(const std::string& cve_id) {
    require_well_formed(cve_id);
    auto payload = fetch("nvd", cve_id, [&]() -> std::optional<json> {
      return fetch_nvd_live(cve_id);
    });
    if (!payload) return std::nullopt;
    auto record = parse_nvd_record(*payload, cve_id);
    if (!record) return std::nullopt;
    if (past_as_of(record->published)) return std::nullopt;  // no lookahead
    return record;
  }

  // --- KEV -----------------------------------------------------------------

  std::optional<KevEntry> lookup_kev(const std::string& cve_id) {
    require_well_formed(cve_id);
    load_kev();
    auto it = kev_.find(cve_id);
    if (it == kev_.end()) {
      note_provenance("kev", cve_id, Origin::absent);
      return std::nullopt;
    }
    if (past_as_of(it->second.date_added)) {
      note_provenance("kev", cve_id, Origin::absent);
      return std::nullopt;
    }
    note_provenance("kev", cve_id, kev_origin_);
    return it->second;
  }

  // --- EPSS ----------------------------------------------------------------

  // Latest snapshot with snapshot_date <= as_of; never reads ahead.
  std::optional<EpssSnapshot> lookup_epss(const std::string& cve_id, UtcTime as_of) {
    require_well_formed(cve_id);
    load_epss();
    if (epss_snapshots_.empty())
      throw NoSnapshotLoaded("no EPSS snapshot files under " +
                             (cfg_.fixture_dir / "epss").string());
    if (cfg_.as_of && as_of > *cfg_.as_of) as_of = *cfg_.as_of;
    const std::map<std::string, EpssSnapshot>* best = nullptr;
    UtcTime best_date{};
    for (const auto& [date, rows] : epss_snapshots_) {
      if (date <= as_of && (!best || best_date < date)) {
        best = &rows;
        best_date = date;
      }
    }
    if (!best) return std::nullopt;  // as_of precedes every snapshot
    auto it = best->find(cve_id);
    if (it == best->end()) return std::nullopt;
    return it->second;
  }

  // --- ATT&CK technique mappings -------------------------------------------

  // Technique ids for a CVE from the fixture map, dictionary-validated
  // against the vendored catalog; fabricated ids are dropped with a warning.
  std::vector<std::string> lookup_techniques(const std::string& cve_id) {
    require_well_formed(cve_id);
    auto doc = read_fixture_file("attack_map.json");
    std::vector<std::string> out;
    if (!doc || !doc->contains(cve_id)) return out;
    for (const auto& t : (*doc)[cve_id]) {
      auto id = t.get<std::string>();
      if (lookup_technique(id)) {
        out.push_back(id);
      } else {
        warn("attack_map: technique '" + id + "' for " + cve_id +
             " failed catalog validation; dropped");
      }
    }
    return out;
  }

  // --- Advisory context ------------------------------------------------------

  std::optional<AdvisoryContext> lookup_advisory_context(const std::string& cve_id) {
    require_well_formed(cve_id);
    auto doc = read_fixture_file("advisory_context.json");
    if (!doc || !doc->contains(cve_id)) return std::nullopt;
    const auto& j = (*doc)[cve_id];
    AdvisoryContext ctx;
    ctx.channel = j.value("channel", "");
    ctx.type = j.value("type", "");
    ctx.patch_available = j.value("patch_available", false);
    for (const auto& s : j.value("affected_systems", json::array()))
      ctx.affected_systems.push_back(
          {s.value("vendor", ""), s.value("product", ""), s.value("version_range", "")});
    ctx.exploitation_claim = j.value("exploitation_claim", "");
    return ctx;
  }

  // --- Temporal events -------------------------------------------------------

  // Merged exploitation events from every feed, deduplicated by (kind, day)
  // keeping the highest-priority source, clipped to the window and the
  // configured as_of. Per-source failures degrade to partial results.
  std::vector<TemporalEvent> query_exploit_events(const std::string& cve_id,
                                                  std::pair<UtcTime, UtcTime> window) {
    require_well_formed(cve_id);
    if (window.second < window.first) throw StoreError("event window end precedes start");
    UtcTime end = window.second;
    if (cfg_.as_of && *cfg_.as_of < end) end = *cfg_.as_of;

    std::vector<TemporalEvent> events;

    // Exploit-DB: public PoC publications.
    if (auto doc = read_fixture_file("exploitdb.json")) {
      for (const auto& row : *doc) {
        if (row.value("cve_id", "") != cve_id) continue;
        TemporalEvent e;
        e.at = parse_iso8601(row.at("date").get<std::string>());
        e.kind = EventKind::poc_released;
        e.detail = row.value("title", "public exploit");
        e.source = row.value("source", "exploit-db");
        events.push_back(e);
      }
    }

    // KEV listing.
    if (auto kev = lookup_kev(cve_id)) {
      events.push_back({kev->date_added, EventKind::kev_listed, kev->notes, "cisa-kev"});
    }

    // VirusTotal (optional, API-key gated; disabled by default).
    if (cfg_.enable_virustotal) {
      if (auto doc = read_fixture_file("virustotal/" + cve_id + ".json")) {
        if (doc->contains("first_seen")) {
          events.push_back({parse_iso8601((*doc)["first_seen"].get<std::string>()),
                            EventKind::malware_seen, doc->value("detail", "malware first seen"),
                            "virustotal"});
        }
      }
    }

    // Pre-normalized advisory event feed; unrecognized kinds map to
    // advisory-updated with the original label preserved in the detail.
    if (auto doc = read_fixture_file("advisories.json")) {
      for (const auto& row : *doc) {
        if (row.value("cve_id", "") != cve_id) continue;
        TemporalEvent e;
        e.at = parse_iso8601(row.at("date").get<std::string>());
        auto kind_label = row.value("kind", "advisory-updated");
        auto kind = event_kind_from_string(kind_label);
        if (kind) {
          e.kind = *kind;
          e.detail = row.value("detail", "");
        } else {
          e.kind = EventKind::advisory_updated;
          e.detail = kind_label + ": " + row.value("detail", "");
          warn("advisories: unrecognized event kind '" + kind_label + "' mapped to advisory-updated");
        }
        e.source = row.value("source", "vendor advisory");
        events.push_back(e);
      }
    }

    // Clip, then dedup by (kind, calendar day) keeping the priority source.
    std::vector<TemporalEvent> clipped;
    for (auto& e : events)
      if (!(e.at < window.first) && !(end < e.at)) clipped.push_back(std::move(e));

    std::map<std::pair<std::string, std::string>, TemporalEvent> dedup;
    for (auto& e : clipped) {
      auto key = std::make_pair(threatrank::to_string(e.kind), format_iso8601_date(e.at));
      auto it = dedup.find(key);
      if (it == dedup.end() || source_priority(e.source) < source_priority(it->second.source)) {
        dedup[key] = e;
      }
    }
    std::vector<TemporalEvent> out;
    out.reserve(dedup.size());
    for (auto& [_, e] : dedup) out.push_back(e);
    std::sort(out.begin(), out.end(), [](const TemporalEvent& a, const TemporalEvent& b) {
      if (a.at != b.at) return a.at < b.at;
      auto pa = source_priority(a.source), pb = source_priority(b.source);
      if (pa != pb) return pa < pb;
      return threatrank::to_string(a.kind) < threatrank::to_string(b.kind);
    });
    return out;
  }

  // --- Mitigation source actions ---------------------------------------------

  // Actions recorded in source databases for a CVE: fixture patches and
  // advisories, plus the KEV note. Released dates past as_of are not served.
  std::vector<MitigationAction> source_actions(const std::string& cve_id) {
    require_well_formed(cve_id);
    std::vector<MitigationAction> out;
    if (auto doc = read_fixture_file("mitigations/" + cve_id + ".json")) {
      for (const auto& row : *doc) {
        MitigationAction a;
        a.kind = action_kind_from_string(row.at("kind").get<std::string>());
        a.title = row.at("title").get<std::string>();
        a.vendor = row.value("vendor", "");
        a.version_scope = row.value("version_scope", "");
        if (row.contains("released"))
          a.released = parse_iso8601(row["released"].get<std::string>());
        if (row.contains("supersedes_ref")) {
          const auto& ref = row["supersedes_ref"];
          a.supersedes = canonical_key(ref.value("title", ""), ref.value("vendor", ""),
                                       ref.value("version_scope", ""));
        } else if (row.contains("supersedes")) {
          a.supersedes = row["supersedes"].get<std::string>();
        }
        a.side_effects = row.value("side_effects", "");
        a.source = row.value("source", "vendor advisory");
        a.authority = source_authority_from_string(row.value("authority", "vendor"));
        a.maturity = patch_maturity_from_string(row.value("maturity", "unknown"));
        a.complexity = complexity_from_string(row.value("complexity", "moderate"));
        if (a.released && past_as_of(*a.released)) continue;  // no lookahead
        out.push_back(std::move(a));
      }
    }
    if (auto kev = lookup_kev(cve_id); kev && !kev->notes.empty()) {
      MitigationAction note;
      note.kind = ActionKind::mitigation_note;
      note.title = kev->notes;
      note.vendor = "CISA";
      note.version_scope = cve_id;
      note.released = kev->date_added;
      note.source = "cisa-kev";
      note.authority = SourceAuthority::kev;
      out.push_back(std::move(note));
    }
    return out;
  }

  // --- Diagnostics -----------------------------------------------------------

  const std::vector<ProvenanceRecord>& provenance_log() const { return provenance_; }
  const std::vector<std::string>& warnings() const { return warnings_; }

  static int source_priority(const std::string& source) {
    if (source == "cisa-kev") return 0;
    if (source == "exploit-db") return 1;
    if (source == "virustotal") return 2;
    return 3;
  }

 private:
  // --- shared plumbing -------------------------------------------------------

  void require_well_formed(const std::string& cve_id) const {
    if (!is_cve_id(cve_id)) throw MalformedId("not a CVE id: '" + cve_id + "'");
  }

  bool past_as_of(UtcTime t) const { return cfg_.as_of && *cfg_.as_of < t; }

  void warn(std::string message) {
    std::lock_guard<std::mutex> lock(mutex_);
    warnings_.push_back(std::move(message));
  }

  void note_provenance(const std::string& source, const std::string& key, Origin origin) {
    std::lock_guard<std::mutex> lock(mutex_);
    provenance_.push_back({source, key, origin});
  }

  std::optional<json> read_json_file(const std::filesystem::path& path) const {
    std::ifstream in(path);
    if (!in.good()) return std::nullopt;
    auto doc = json::parse(in, nullptr, /*allow_exceptions=*/false);
    if (doc.is_discarded()) return std::nullopt;
    return doc;
  }

  std::optional<json> read_fixture_file(const std::string& rel) const {
    if (cfg_.fixture_dir.empty()) return std::nullopt;
    return read_json_file(cfg_.fixture_dir / rel);
  }

  // Cache layout: one JSON file per (source, key) named by the digest of
  // "source|key". Payloads carry no wall-clock data, so replaying a query
  // sequence reproduces the directory byte for byte.
  std::filesystem::path cache_path(const std::string& source, const std::string& key) const {
    return cfg_.cache_dir / (sha256_hex(source + "|" + key) + ".json");
  }

  std::optional<json> cache_get(const std::string& source, const std::string& key) const {
    if (cfg_.cache_dir.empty()) return std::nullopt;
    auto doc = read_json_file(cache_path(source, key));
    if (!doc || !doc->contains("payload")) return std::nullopt;
    return (*doc)["payload"];
  }

  void cache_put(const std::string& source, const std::string& key, const json& payload) {
    if (cfg_.cache_dir.empty()) return;
    std::lock_guard<std::mutex> lock(mutex_);
    std::filesystem::create_directories(cfg_.cache_dir);
    auto path = cache_path(source, key);
    json doc{{"source", source}, {"key", key}, {"payload", payload}};
    auto tmp = path;
    tmp += ".tmp";
    {
      std::ofstream out(tmp);
      out << doc.dump(2) << "\n";
    }
    std::filesystem::rename(tmp, path);
  }

  // cache -> fixture -> live, recording provenance.
  std::optional<json> fetch(const std::string& source, const std::string& key,
                            const std::function<std::optional<json>()>& live) {
    if (auto cached = cache_get(source, key)) {
      note_provenance(source, key, Origin::cache);
      return cached;
    }
    if (auto fixture = read_fixture_file(source + "/" + key + ".json")) {
      cache_put(source, key, *fixture);
      note_provenance(source, key, Origin::fixture);
      return fixture;
    }
    if (!cfg_.offline) {
      auto fetched = live();
      if (fetched) {
        cache_put(source, key, *fetched);
        note_provenance(source, key, Origin::live);
        return fetched;
      }
    }
    note_provenance(source, key, Origin::absent);
    return std::nullopt;
  }

  // --- NVD -------------------------------------------------------------------

  // Spaces out live requests per source.
  void rate_limit(const std::string& source) {
    std::chrono::steady_clock::time_point wait_until;
    {
      std::lock_guard<std::mutex> lock(rate_mutex_);
      auto now = std::chrono::steady_clock::now();
      auto interval = std::chrono::duration_cast<std::chrono::steady_clock::duration>(
          std::chrono::duration<double>(cfg_.live_min_interval_seconds));
      auto& next_allowed = next_allowed_[source];
      wait_until = std::max(next_allowed, now);
      next_allowed = wait_until + interval;
    }
    std::this_thread::sleep_until(wait_until);
  }

  std::optional<json> fetch_nvd_live(const std::string& cve_id) {
    if (!cfg_.fetcher) throw SourceUnavailable("live NVD lookup requested but no fetcher configured");
    rate_limit("nvd");
    count_network_operation("nvd:" + cve_id);
    auto body = cfg_.fetcher(cfg_.nvd_base_url + "?cveId=" + cve_id);
    if (!body) throw SourceUnavailable("NVD fetch failed for " + cve_id);
    auto doc = json::parse(*body, nullptr, false);
    if (doc.is_discarded()) throw SourceUnavailable("NVD returned malformed JSON for " + cve_id);
    return doc;
  }

  static CveStatus parse_status(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (s == "reserved") return CveStatus::reserved;
    if (s == "disputed") return CveStatus::disputed;
    if (s == "rejected") return CveStatus::rejected;
    return CveStatus::published;
  }

  // NVD API 2.0 response shape; the raw payload is cached verbatim alongside
  // this parsed view.
  std::optional<CveRecord> parse_nvd_record(const json& payload, const std::string& cve_id) {
    if (!payload.contains("vulnerabilities") || payload["vulnerabilities"].empty())
      return std::nullopt;
    const auto& cve = payload["vulnerabilities"][0].value("cve", json::object());
    CveRecord r;
    r.cve_id = cve.value("id", cve_id);
    for (const auto& d : cve.value("descriptions", json::array())) {
      if (d.value("lang", "") == "en") {
        r.description = d.value("value", "");
        break;
      }
    }
    if (cve.contains("published")) r.published = parse_iso8601(cve["published"].get<std::string>());
    if (cve.contains("lastModified"))
      r.last_modified = parse_iso8601(cve["lastModified"].get<std::string>());
    else
      r.last_modified = r.published;
    r.status = parse_status(cve.value("vulnStatus", "published"));
    for (const auto& ref : cve.value("references", json::array()))
      r.references.push_back(ref.value("url", ""));
    const auto& metrics = cve.value("metrics", json::object());
    if (metrics.contains("cvssMetricV31") && !metrics["cvssMetricV31"].empty()) {
      const auto& data = metrics["cvssMetricV31"][0].value("cvssData", json::object());
      if (data.contains("vectorString")) r.cvss_vector = data["vectorString"].get<std::string>();
    }
    return r;
  }

  // --- KEV -------------------------------------------------------------------

  void load_kev() {
    std::call_once(kev_once_, [&] {
      std::optional<json> doc = read_fixture_file("kev.json");
      Origin origin = Origin::fixture;
      if (!doc && !cfg_.offline && cfg_.fetcher) {
        rate_limit("kev");
        count_network_operation("kev:catalog");
        if (auto body = cfg_.fetcher(cfg_.kev_url)) {
          auto parsed = json::parse(*body, nullptr, false);
          if (!parsed.is_discarded()) {
            doc = parsed;
            origin = Origin::live;
          }
        }
      }
      kev_origin_ = origin;
      if (!doc) return;
      for (const auto& row : doc->value("vulnerabilities", json::array())) {
        KevEntry e;
        e.cve_id = row.value("cveID", "");
        if (e.cve_id.empty()) continue;
        e.date_added = parse_iso8601(row.at("dateAdded").get<std::string>());
        if (row.contains("dueDate") && row["dueDate"].is_string() &&
            !row["dueDate"].get<std::string>().empty())
          e.due_date = parse_iso8601(row["dueDate"].get<std::string>());
        if (e.due_date && *e.due_date < e.date_added) {
          warn("kev: entry " + e.cve_id + " has due_date before date_added; due_date dropped");
          e.due_date.reset();
        }
        // notes, falling back through the published catalog fields
        e.notes = row.value("notes", "");
        if (e.notes.empty()) e.notes = row.value("shortDescription", "");
        if (e.notes.empty()) e.notes = row.value("vulnerabilityName", "");
        auto it = kev_.find(e.cve_id);
        if (it == kev_.end()) {
          kev_.emplace(e.cve_id, std::move(e));
        } else {
          // duplicate rows: first-by-date_added wins
          if (e.date_added < it->second.date_added) it->second = std::move(e);
          warn("kev: duplicate rows for " + row.value("cveID", "") +
               "; keeping first by date_added");
        }
      }
    });
  }

  // --- EPSS ------------------------------------------------------------------

  // Snapshot files are CSVs named epss_scores-YYYY-MM-DD.csv with columns
  // cve,epss,percentile; a leading '#' comment line is tolerated.
  void load_epss() {
    std::call_once(epss_once_, [&] {
      auto dir = cfg_.fixture_dir / "epss";
      if (!std::filesystem::is_directory(dir)) return;
      for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        auto name = entry.path().filename().string();
        if (name.rfind("epss_scores-", 0) != 0 || entry.path().extension() != ".csv") continue;
        auto date_part = name.substr(12, 10);
        auto date = try_parse_iso8601(date_part);
        if (!date) {
          warn("epss: cannot parse snapshot date from filename " + name);
          continue;
        }
        std::ifstream in(entry.path());
        std::string line;
        std::map<std::string, EpssSnapshot> rows;
        while (std::getline(in, line)) {
          if (line.empty() || line[0] == '#') continue;
          std::stringstream ss(line);
          std::string cve, eps, pct;
          if (!std::getline(ss, cve, ',') || !std::getline(ss, eps, ',') ||
              !std::getline(ss, pct, ','))
            continue;
          if (cve == "cve") continue;  // header
          EpssSnapshot s;
          s.cve_id = cve;
          s.probability = std::stod(eps);
          s.percentile = std::stod(pct);
          s.snapshot_date = *date;
          rows[cve] = s;
        }
        epss_snapshots_[*date] = std::move(rows);
      }
    });
  }

  StoreConfig cfg_;
  mutable std::mutex mutex_;
  std::mutex rate_mutex_;
  std::map<std::string, std::chrono::steady_clock::time_point> next_allowed_;
  std::vector<ProvenanceRecord> provenance_;
  std::vector<std::string> warnings_;

  std::once_flag kev_once_;
  std::map<std::string, KevEntry> kev_;
  Origin kev_origin_ = Origin::absent;

  std::once_flag epss_once_;
  std::map<UtcTime, std::map<std::string, EpssSnapshot>> epss_snapshots_;
};

}  // namespace threatrank::knowledge
