#include <doctest.h>

#include <fstream>
#include <vector>

#include <json.hpp>

#include "support/oracle_cvss.hpp"
#include "threatrank/core/cvss_vector.hpp"
#include "threatrank/cvss/engine.hpp"

using namespace threatrank;
using threatrank::cvss::Rating;

namespace {

std::vector<std::string> all_vectors() {
  std::vector<std::string> out;
  out.reserve(2592);
  for (const char* av : {"N", "A", "L", "P"})
    for (const char* ac : {"L", "H"})
      for (const char* pr : {"N", "L", "H"})
        for (const char* ui : {"N", "R"})
          for (const char* s : {"U", "C"})
            for (const char* c : {"N", "L", "H"})
              for (const char* i : {"N", "L", "H"})
                for (const char* a : {"N", "L", "H"}) {
                  out.push_back(std::string("AV:") + av + "/AC:" + ac + "/PR:" + pr +
                                "/UI:" + ui + "/S:" + s + "/C:" + c + "/I:" + i + "/A:" + a);
                }
  return out;
}

double score_of(const std::string& v) { return cvss::base_score(parse_cvss_vector(v)).base; }

}  // namespace

TEST_SUITE("cvss engine") {
  TEST_CASE("scores the documented example vectors") {
    CHECK(score_of("AV:N/AC:L/PR:L/UI:N/S:C/C:H/I:H/A:H") == doctest::Approx(9.9).epsilon(1e-12));
    CHECK(score_of("AV:N/AC:L/PR:N/UI:N/S:U/C:H/I:H/A:H") == doctest::Approx(9.8).epsilon(1e-12));
  }

  TEST_CASE("no impact means base zero") {
    for (const char* av : {"N", "A", "L", "P"}) {
      auto v = std::string("AV:") + av + "/AC:L/PR:N/UI:N/S:U/C:N/I:N/A:N";
      CHECK(score_of(v) == 0.0);
      auto changed = std::string("AV:") + av + "/AC:L/PR:N/UI:N/S:C/C:N/I:N/A:N";
      CHECK(score_of(changed) == 0.0);
    }
  }

  TEST_CASE("breakdown intermediates are exposed") {
    auto b = cvss::base_score(parse_cvss_vector("AV:N/AC:L/PR:L/UI:N/S:C/C:H/I:H/A:H"));
    CHECK(b.iss == doctest::Approx(0.914816).epsilon(1e-9));
    CHECK(b.impact > 6.0);
    CHECK(b.exploitability > 3.0);
  }

  TEST_CASE("matches the reference calculator on all 2592 vectors") {
    for (const auto& v : all_vectors()) {
      double mine = score_of(v);
      double ref = oracle::base_score(v);
      INFO("vector ", v);
      CHECK(mine == doctest::Approx(ref).epsilon(1e-12));
      // one decimal place, inside [0,10]
      CHECK(mine >= 0.0);
      CHECK(mine <= 10.0);
      double tenths = mine * 10.0;
      CHECK(std::abs(tenths - std::round(tenths)) < 1e-9);
    }
  }

  TEST_CASE("upgrading any single impact metric never lowers the score") {
    auto upgrade = [](ImpactLevel l) {
      return l == ImpactLevel::none ? ImpactLevel::low : ImpactLevel::high;
    };
    for (const auto& s : all_vectors()) {
      auto v = parse_cvss_vector(s);
      for (auto member : {&CvssVector::c, &CvssVector::i, &CvssVector::a}) {
        if (v.*member == ImpactLevel::high) continue;
        CvssVector up = v;
        up.*member = upgrade(v.*member);
        INFO("vector ", s);
        CHECK(cvss::base_score(up).base >= cvss::base_score(v).base);
      }
    }
  }

  TEST_CASE("downgrading AV exposure never raises the score") {
    auto downgrade = [](AttackVector a) {
      switch (a) {
        case AttackVector::network: return AttackVector::adjacent;
        case AttackVector::adjacent: return AttackVector::local;
        case AttackVector::local: return AttackVector::physical;
        case AttackVector::physical: return AttackVector::physical;
      }
      return AttackVector::physical;
    };
    for (const auto& s : all_vectors()) {
      auto v = parse_cvss_vector(s);
      if (v.av == AttackVector::physical) continue;
      CvssVector down = v;
      down.av = downgrade(v.av);
      INFO("vector ", s);
      CHECK(cvss::base_score(down).base <= cvss::base_score(v).base);
    }
  }

  TEST_CASE("scope change never lowers the score when impact is positive") {
    for (const auto& s : all_vectors()) {
      auto v = parse_cvss_vector(s);
      if (v.scope == Scope::changed) continue;
      if (cvss::base_score(v).impact <= 0.0) continue;
      CvssVector changed = v;
      changed.scope = Scope::changed;
      INFO("vector ", s);
      CHECK(cvss::base_score(changed).base >= cvss::base_score(v).base);
    }
  }

  TEST_CASE("agrees with published NVD vector/score pairs") {
    std::ifstream in(std::string(TEST_FIXTURE_DIR) + "/nvd_vectors.json");
    REQUIRE(in.good());
    auto fixture = nlohmann::json::parse(in);
    REQUIRE(fixture.size() >= 50);
    for (const auto& row : fixture) {
      auto vec = row.at("vector").get<std::string>();
      double expected = row.at("score").get<double>();
      INFO(row.at("cve").get<std::string>(), " ", vec);
      CHECK(score_of(vec) == doctest::Approx(expected).epsilon(1e-12));
      CHECK(oracle::base_score(vec) == doctest::Approx(expected).epsilon(1e-12));
    }
  }
}

TEST_SUITE("severity rating") {
  TEST_CASE("bands") {
    CHECK(cvss::severity_rating(0.0) == Rating::none);
    CHECK(cvss::severity_rating(0.1) == Rating::low);
    CHECK(cvss::severity_rating(3.9) == Rating::low);
    CHECK(cvss::severity_rating(4.0) == Rating::medium);
    CHECK(cvss::severity_rating(6.9) == Rating::medium);
    CHECK(cvss::severity_rating(7.0) == Rating::high);
    CHECK(cvss::severity_rating(7.8) == Rating::high);
    CHECK(cvss::severity_rating(8.9) == Rating::high);
    CHECK(cvss::severity_rating(9.0) == Rating::critical);
    CHECK(cvss::severity_rating(10.0) == Rating::critical);
  }

  TEST_CASE("out of range") {
    CHECK_THROWS_AS(cvss::severity_rating(-0.1), cvss::OutOfRange);
    CHECK_THROWS_AS(cvss::severity_rating(10.1), cvss::OutOfRange);
  }
}
