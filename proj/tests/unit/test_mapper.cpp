#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "duplex/mapper.hpp"
#include "duplex/schema.hpp"
#include "support/corpus.hpp"
#include "support/record_gen.hpp"

using namespace duplex;
using duplex::testing::data_path;
using duplex::testing::fixture_path;
using duplex::testing::load_domain;
using duplex::testing::slurp;

namespace {

ExtractionRecord fixture(const std::string& name) { return parse_record(slurp(data_path("fixtures/" + name + ".json"))); }

/// Body of a top-level "(:name ...)" section, located by paren matching.
std::string section(const std::string& text, const std::string& name) {
  const auto open = text.find("(" + name);
  REQUIRE(open != std::string::npos);
  int depth = 0;
  for (std::size_t i = open; i < text.size(); ++i) {
    if (text[i] == '(') ++depth;
    if (text[i] == ')' && --depth == 0) return text.substr(open, i - open + 1);
  }
  FAIL("unbalanced section");
  return {};
}

std::vector<std::string> tokens(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : text) {
    if (c == '(' || c == ')' || std::isspace(static_cast<unsigned char>(c))) {
      if (!cur.empty()) out.push_back(cur), cur.clear();
      if (c == '(' || c == ')') out.emplace_back(1, c);
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

}  // namespace

TEST_CASE("listing record renders the listing problem blocks") {
  const auto domain = load_domain("tabletop");
  const std::string got = map_and_render(fixture("listing1"), domain, "listing");
  const std::string want = slurp(fixture_path("listing2.txt"));
  for (const char* s : {":objects", ":init", ":goal"}) {
    CAPTURE(s);
    CHECK(tokens(section(got, s)) == tokens(section(want, s)));
  }
}

TEST_CASE("constants are not redeclared and goals are canonical") {
  const auto domain = load_domain("kitchen");
  auto r = fixture("kitchen-soup");
  r.goal_relations.push_back(r.goal_relations[0]);
  const auto p = map_to_problem(r, domain, "soup");
  CHECK(p.objects.size() == 2);
  CHECK(p.goal.size() == 1);
  CHECK(p.init.contains(pddl::Atom{"at", {"soup", "counter"}}));
}

TEST_CASE("records that skipped validation are rejected") {
  const auto domain = load_domain("tabletop");
  auto r = fixture("listing1");
  SUBCASE("untyped object") {
    r.objects[0].type.reset();
    CHECK_THROWS_AS(map_to_problem(r, domain, "p"), MapError);
  }
  SUBCASE("missing key") {
    r.missing_keys = {"relations.goal"};
    CHECK_THROWS_AS(map_to_problem(r, domain, "p"), MapError);
  }
  SUBCASE("vocabulary error") {
    r.init_relations[0].predicate = "levitates";
    CHECK_THROWS_AS(map_to_problem(r, domain, "p"), MapError);
  }
  SUBCASE("bad problem name") {
    CHECK_THROWS_AS(map_to_problem(r, domain, "Bad Name"), MapError);
  }
}

TEST_CASE("rendered problems re-parse to the mapped problem") {
  for (const char* d : {"blocksworld", "gripper", "kitchen", "tabletop", "visitall"}) {
    const auto domain = load_domain(d);
    duplex::testing::RecordGenerator gen(derive_schema(domain), 99);
    for (int i = 0; i < 100; ++i) {
      CAPTURE(d);
      CAPTURE(i);
      const auto r = gen.next();
      const auto p = map_to_problem(r, domain, "gen");
      const auto back = pddl::parse_problem(pddl::render_problem(p), domain);
      CHECK(back == p);
      CHECK_NOTHROW(pddl::check_problem(back, domain));
    }
  }
}
