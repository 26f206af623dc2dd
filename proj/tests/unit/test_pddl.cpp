#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <random>
#include <regex>

#include "duplex/pddl.hpp"
#include "support/corpus.hpp"

using namespace duplex;
using namespace duplex::pddl;
using duplex::testing::data_path;
using duplex::testing::load_domain;
using duplex::testing::slurp;

namespace {

std::vector<std::string> tokens(const std::string& text) {
  std::vector<std::string> out;
  std::regex re(R"(\(|\)|[^\s()]+)");
  for (auto it = std::sregex_iterator(text.begin(), text.end(), re); it != std::sregex_iterator(); ++it) {
    out.push_back(it->str());
  }
  return out;
}

const char* kTabletopListing = R"(
(define (problem listing)
  (:domain tabletop)
  (:objects
    apple_01 - apple
    table_main - table
    plate_01 - plate
  )
  (:init
    (on apple_01 table_main)
  )
  (:goal
    (and
      (on apple_01 plate_01)
    )
  )
))";

}  // namespace

TEST_CASE("blocksworld domain shape matches a token count of the file") {
  const std::string text = slurp(data_path("domains/blocksworld.pddl"));
  // Independent count: action headers and predicate declarations by scanning text.
  std::size_t actions = 0;
  for (std::size_t p = text.find("(:action"); p != std::string::npos; p = text.find("(:action", p + 1)) ++actions;
  const auto pred_begin = text.find("(:predicates");
  const auto pred_end = text.find("(:action");
  std::size_t preds = 0;
  for (std::size_t i = pred_begin + 1; i < pred_end; ++i) preds += text[i] == '(';

  const Domain d = parse_domain(text);
  CHECK(d.name == "blocksworld");
  CHECK(d.actions.size() == actions);
  CHECK(d.predicates.size() == preds);
  CHECK(d.actions.size() == 4);
  CHECK(d.predicates.size() == 5);
  REQUIRE(d.find_action("stack") != nullptr);
  CHECK(d.find_action("stack")->precondition.size() == 3);
  CHECK(d.find_action("unstack")->del.size() == 3);
}

TEST_CASE("undeclared predicate parameter type is reported by name") {
  const char* text = "(define (domain d) (:types block) (:predicates (on ?x - block ?y - widget)))";
  try {
    parse_domain(text);
    FAIL("expected ParseError");
  } catch (const UnsupportedConstruct&) {
    FAIL("wrong error kind");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("widget") != std::string::npos);
    CHECK(e.position().line == 1);
    CHECK(e.position().column == 68);
  }
}

TEST_CASE("empty input fails at position 0") {
  try {
    parse_domain("");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.position().offset == 0);
    CHECK(e.position().line == 1);
    CHECK(e.position().column == 1);
  }
  CHECK_THROWS_AS(parse_domain("   ; only a comment\n"), ParseError);
}

TEST_CASE("errors carry 1-based line and column") {
  const char* text = "(define (domain d)\n  (:predicates (p))\n  (:action a :parameters () :effect (q)))";
  try {
    parse_domain(text);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.position().line == 3);
    CHECK(e.position().column == 38);
    CHECK(std::string(e.what()).find("'q'") != std::string::npos);
  }
}

TEST_CASE("out-of-subset constructs are rejected as unsupported") {
  auto construct_of = [](const char* text) {
    try {
      parse_domain(text);
    } catch (const UnsupportedConstruct& e) {
      return e.construct();
    }
    return std::string("<none>");
  };
  CHECK(construct_of("(define (domain d) (:requirements :adl))") == ":adl");
  CHECK(construct_of("(define (domain d) (:functions (f)))") == ":functions");
  CHECK(construct_of("(define (domain d) (:predicates (p ?x)) (:action a :parameters (?x) "
                     ":precondition (forall (?y) (p ?y)) :effect (p ?x)))") == "forall");
  CHECK(construct_of("(define (domain d) (:predicates (p ?x)) (:action a :parameters (?x) "
                     ":effect (when (p ?x) (not (p ?x)))))") == "when");
  CHECK(construct_of("(define (domain d) (:types a b c) (:predicates (p ?x - (either a b))))") == "either");
}

TEST_CASE("identifiers are case-insensitive and comments are stripped") {
  const char* dom = "(DEFINE (DOMAIN Tiny) ; comment (\n (:PREDICATES (Lit ?X)) (:ACTION Flip :PARAMETERS (?X) :EFFECT (Lit ?X)))";
  const Domain d = parse_domain(dom);
  CHECK(d.name == "tiny");
  REQUIRE(d.find_predicate("lit") != nullptr);
  CHECK(d.find_action("flip")->add.front().args.front() == "?x");
  const ProblemSpec p = parse_problem("(define (problem P) (:domain TINY) (:objects A) (:init) (:goal (LIT a)))", d);
  CHECK(p.objects.front().name == "a");
  CHECK(p.objects.front().type == "object");
}

TEST_CASE("type hierarchy queries") {
  const Domain d = parse_domain("(define (domain t) (:types a - b b - c c apple))");
  CHECK(is_subtype("apple", "object", d.types));
  CHECK_FALSE(is_subtype("object", "apple", d.types));
  CHECK(is_subtype("a", "c", d.types));
  CHECK(is_subtype("a", "a", d.types));
  CHECK_FALSE(is_subtype("c", "a", d.types));
  CHECK_THROWS_AS(is_subtype("pear", "object", d.types), std::out_of_range);
  CHECK(d.types.parent("a") == "b");
  CHECK(d.types.parent("object").empty());

  CHECK_THROWS_AS(parse_domain("(define (domain t) (:types a - b b - a))"), ParseError);
  CHECK_THROWS_AS(parse_domain("(define (domain t) (:types a - b a - c))"), ParseError);
}

TEST_CASE("listing problem parses against the tabletop domain") {
  const Domain d = load_domain("tabletop");
  const ProblemSpec p = parse_problem(kTabletopListing, d);
  REQUIRE(p.objects.size() == 3);
  CHECK(p.objects[0] == TypedName{"apple_01", "apple"});
  CHECK(p.objects[1] == TypedName{"table_main", "table"});
  CHECK(p.objects[2] == TypedName{"plate_01", "plate"});
  CHECK(p.init == std::set<Atom>{Atom{"on", {"apple_01", "table_main"}}});
  CHECK(p.goal == std::vector<Literal>{Literal{Atom{"on", {"apple_01", "plate_01"}}, false}});
  CHECK_NOTHROW(check_problem(p, d));
}

TEST_CASE("problem semantic errors name the offending symbol") {
  const Domain d = load_domain("tabletop");
  auto symbol_of = [&](const std::string& text) {
    try {
      parse_problem(text, d);
    } catch (const SemanticError& e) {
      return e.symbol();
    }
    return std::string("<none>");
  };
  const std::string head = "(define (problem p) (:domain tabletop) (:objects apple_01 - apple t - table) ";
  CHECK(symbol_of(head + "(:init (on apple_01 t)) (:goal (on apple_01 plate_9)))") == "plate_9");
  CHECK(symbol_of(head + "(:init (levitates apple_01)) (:goal (and)))") == "levitates");
  CHECK(symbol_of(head + "(:init (on apple_01)) (:goal (and)))") == "(on apple_01)");
  CHECK(symbol_of(head + "(:init (on t apple_01)) (:goal (and)))") == "t");
  CHECK(symbol_of("(define (problem p) (:domain tabletop) (:objects x - pear) (:init) (:goal (and)))") == "pear");
  CHECK(symbol_of("(define (problem p) (:domain other) (:objects) (:init) (:goal (and)))") == "other");
}

TEST_CASE("empty init and empty goal form a valid problem") {
  const Domain d = load_domain("tabletop");
  const ProblemSpec p = parse_problem("(define (problem p) (:domain tabletop) (:objects) (:init) (:goal (and)))", d);
  CHECK(p.objects.empty());
  CHECK(p.init.empty());
  CHECK(p.goal.empty());
  const std::string text = render_problem(p);
  CHECK(text.find("(:goal\n    (and\n    )\n  )") != std::string::npos);
  CHECK(parse_problem(text, d) == p);
}

TEST_CASE("rendered listing problem matches the listing blocks token for token") {
  const Domain d = load_domain("tabletop");
  const std::string rendered = render_problem(parse_problem(kTabletopListing, d));
  const auto body = tokens(rendered);
  // Drop "( define ( problem name ) ( :domain tabletop )" and the final ")".
  const std::vector<std::string> blocks(body.begin() + 10, body.end() - 1);
  const auto expected = tokens(slurp(duplex::testing::fixture_path("listing2.txt")));
  CHECK(doctest::toString(blocks.size()) == doctest::toString(expected.size()));
  CHECK(blocks == expected);
}

TEST_CASE("render is stable and round-trips every bundled problem") {
  const std::vector<std::pair<std::string, std::string>> corpus = {
      {"blocksworld", "bw-sussman"}, {"blocksworld", "bw-4"},      {"blocksworld", "bw-5"},
      {"gripper", "gripper-2"},      {"gripper", "gripper-4"},     {"visitall", "visitall-2x2"},
      {"visitall", "visitall-3x3"},  {"visitall", "visitall-4x4"}, {"tabletop", "tabletop-listing"},
      {"kitchen", "kitchen-soup"}};
  for (const auto& [dom, prob] : corpus) {
    CAPTURE(prob);
    const Domain d = load_domain(dom);
    const ProblemSpec p = duplex::testing::load_problem(prob, d);
    CHECK_NOTHROW(check_problem(p, d));
    const std::string once = render_problem(p);
    const ProblemSpec back = parse_problem(once, d);
    CHECK(back == p);
    CHECK(render_problem(back) == once);
  }
}

TEST_CASE("init and goal atoms render in lexicographic order") {
  const Domain d = load_domain("blocksworld");
  const ProblemSpec p = duplex::testing::load_problem("bw-sussman", d);
  const std::string text = render_problem(p);
  std::vector<std::string> lines;
  std::istringstream in(text);
  bool in_init = false;
  for (std::string line; std::getline(in, line);) {
    if (line == "  (:init") {
      in_init = true;
    } else if (in_init && line == "  )") {
      break;
    } else if (in_init) {
      lines.push_back(line);
    }
  }
  REQUIRE(lines.size() == 6);
  CHECK(std::is_sorted(lines.begin(), lines.end()));
}

TEST_CASE("parser is total on arbitrary bytes and mutated sources") {
  const Domain d = load_domain("blocksworld");
  const std::string domain_text = slurp(data_path("domains/blocksworld.pddl"));
  const std::string problem_text = slurp(data_path("problems/bw-sussman.pddl"));
  std::mt19937_64 rng(20240611);
  const std::string alphabet = "()-?:; \n\tabcxyz0123456789=\xff\x80";
  auto check_total = [&](const std::string& text) {
    try {
      parse_domain(text);
    } catch (const PddlError&) {
    }
    try {
      parse_problem(text, d);
    } catch (const PddlError&) {
    }
  };
  for (int i = 0; i < 2000; ++i) {
    std::string s(rng() % 64, ' ');
    for (auto& c : s) c = alphabet[rng() % alphabet.size()];
    check_total(s);
    std::string m = (i % 2 == 0) ? domain_text : problem_text;
    for (int k = 0; k < 3; ++k) {
      const std::size_t at = rng() % m.size();
      switch (rng() % 3) {
        case 0: m.erase(at, 1); break;
        case 1: m.insert(at, 1, alphabet[rng() % alphabet.size()]); break;
        default: m[at] = alphabet[rng() % alphabet.size()];
      }
    }
    check_total(m);
  }
  check_total(std::string(10000, '('));
  check_total(std::string(10000, ')'));
}

TEST_CASE("every parsed mutated problem passes the standalone re-check") {
  const Domain d = load_domain("gripper");
  const std::string text = slurp(data_path("problems/gripper-4.pddl"));
  std::mt19937_64 rng(7);
  int accepted = 0;
  for (int i = 0; i < 3000; ++i) {
    std::string m = text;
    const std::size_t at = rng() % m.size();
    m.erase(at, 1 + rng() % 4);
    try {
      const ProblemSpec p = parse_problem(m, d);
      ++accepted;
      CHECK_NOTHROW(check_problem(p, d));
    } catch (const PddlError&) {
    }
  }
  CHECK(accepted > 0);
}
