#include <algorithm>
#include <cctype>
#include <optional>
#include <set>

#include "duplex/pddl.hpp"

namespace duplex::pddl {

namespace {

constexpr int kMaxDepth = 256;

// =========================================================================
// Lexer and s-expression reader
// =========================================================================

struct SExpr {
  bool is_list = false;
  std::string word;
  std::vector<SExpr> items;
  SourcePos pos;

  bool is_word(std::string_view w) const { return !is_list && word == w; }
  bool head_is(std::string_view w) const {
    return is_list && !items.empty() && items.front().is_word(w);
  }
};

class Reader {
 public:
  explicit Reader(std::string_view text) : text_(text) {}

  SExpr read_document() {
    skip_space();
    if (at_end()) throw ParseError("expected '(' but found end of input", pos_);
    SExpr root = read(0);
    skip_space();
    if (!at_end()) throw ParseError("unexpected trailing input after closing ')'", pos_);
    return root;
  }

 private:
  bool at_end() const { return pos_.offset >= text_.size(); }
  char peek() const { return text_[pos_.offset]; }

  void advance() {
    if (peek() == '\n') {
      ++pos_.line;
      pos_.column = 1;
    } else {
      ++pos_.column;
    }
    ++pos_.offset;
  }

  void skip_space() {
    while (!at_end()) {
      const char c = peek();
      if (c == ';') {
        while (!at_end() && peek() != '\n') advance();
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        advance();
      } else {
        return;
      }
    }
  }

  SExpr read(int depth) {
    if (depth > kMaxDepth) throw ParseError("nesting too deep", pos_);
    SExpr expr;
    expr.pos = pos_;
    if (peek() == ')') throw ParseError("unexpected ')'", pos_);
    if (peek() != '(') {
      expr.word = read_word();
      return expr;
    }
    expr.is_list = true;
    advance();
    for (;;) {
      skip_space();
      if (at_end()) throw ParseError("unbalanced '(': expected ')' before end of input", expr.pos);
      if (peek() == ')') {
        advance();
        return expr;
      }
      expr.items.push_back(read(depth + 1));
    }
  }

  std::string read_word() {
    std::string w;
    while (!at_end()) {
      const char c = peek();
      if (c == '(' || c == ')' || c == ';' || std::isspace(static_cast<unsigned char>(c))) break;
      w.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
      advance();
    }
    return w;
  }

  std::string_view text_;
  SourcePos pos_;
};

// =========================================================================
// Shared helpers
// =========================================================================

bool is_variable(std::string_view w) { return w.size() > 1 && w.front() == '?'; }

const SExpr& expect_list(const SExpr& e, std::string_view what) {
  if (!e.is_list) throw ParseError("expected " + std::string(what) + " but found '" + e.word + "'", e.pos);
  return e;
}

const std::string& expect_name(const SExpr& e, std::string_view what) {
  if (e.is_list) throw ParseError("expected " + std::string(what) + " but found a list", e.pos);
  if (!is_valid_name(e.word)) {
    throw ParseError("expected " + std::string(what) + " but found '" + e.word + "'", e.pos);
  }
  return e.word;
}

const std::string& expect_term(const SExpr& e) {
  if (!e.is_list && is_variable(e.word) && is_valid_name(std::string_view(e.word).substr(1))) {
    return e.word;
  }
  return expect_name(e, "a term");
}

void expect_keyword(const SExpr& e, std::string_view kw) {
  if (!e.is_word(kw)) {
    throw ParseError("expected '" + std::string(kw) + "' but found " +
                         (e.is_list ? std::string("a list") : "'" + e.word + "'"),
                     e.pos);
  }
}

[[noreturn]] void unsupported(const SExpr& e) {
  throw UnsupportedConstruct(e.is_list && !e.items.empty() && !e.items.front().is_list
                                 ? e.items.front().word
                                 : e.word,
                             e.pos);
}

const std::set<std::string, std::less<>>& unsupported_heads() {
  static const std::set<std::string, std::less<>> heads = {
      "or",     "imply",    "exists", "forall",     "when", "increase", "decrease",
      "assign", "scale-up", "scale-down", "either", "preference", ">", "<",
      ">=",     "<=",       "+",      "-",          "*",    "/"};
  return heads;
}

struct TypedEntry {
  TypedName tn;
  SourcePos name_pos;
  SourcePos type_pos;
};

/// `a b - t c - u d` into (name, type) pairs; untyped names default to object.
template <class Check>
std::vector<TypedEntry> parse_typed_list(const std::vector<SExpr>& items, std::size_t start,
                                         Check&& check_name) {
  std::vector<TypedEntry> out;
  std::vector<std::pair<std::string, SourcePos>> pending;
  for (std::size_t i = start; i < items.size(); ++i) {
    const SExpr& e = items[i];
    if (e.is_word("-")) {
      if (i + 1 >= items.size()) throw ParseError("expected a type after '-'", e.pos);
      const SExpr& t = items[i + 1];
      if (t.head_is("either")) unsupported(t);
      const std::string& type = expect_name(t, "a type name");
      if (pending.empty()) throw ParseError("'-' without preceding names", e.pos);
      for (auto& [n, p] : pending) out.push_back({TypedName{n, type}, p, t.pos});
      pending.clear();
      ++i;
      continue;
    }
    pending.emplace_back(check_name(e), e.pos);
  }
  for (auto& [n, p] : pending) out.push_back({TypedName{n, std::string(kRootType)}, p, p});
  return out;
}

// =========================================================================
// Domain
// =========================================================================

class DomainParser {
 public:
  Domain parse(const SExpr& root) {
    expect_list(root, "'(define'");
    if (root.items.size() < 2) throw ParseError("expected '(define (domain <name>) ...)'", root.pos);
    expect_keyword(root.items[0], "define");
    const SExpr& header = expect_list(root.items[1], "'(domain <name>)'");
    if (header.items.size() != 2) throw ParseError("expected '(domain <name>)'", header.pos);
    expect_keyword(header.items[0], "domain");
    domain_.name = expect_name(header.items[1], "a domain name");

    std::vector<const SExpr*> actions;
    for (std::size_t i = 2; i < root.items.size(); ++i) {
      const SExpr& section = expect_list(root.items[i], "a domain section");
      if (section.items.empty() || section.items.front().is_list) {
        throw ParseError("expected a section keyword", section.pos);
      }
      const std::string& kw = section.items.front().word;
      if (kw == ":requirements") {
        parse_requirements(section);
      } else if (kw == ":types") {
        parse_types(section);
      } else if (kw == ":constants") {
        parse_constants(section);
      } else if (kw == ":predicates") {
        parse_predicates(section);
      } else if (kw == ":action") {
        actions.push_back(&section);
      } else if (kw == ":functions" || kw == ":derived" || kw == ":durative-action" ||
                 kw == ":constraints" || kw == ":process" || kw == ":event") {
        throw UnsupportedConstruct(kw, section.pos);
      } else {
        throw ParseError("unknown domain section '" + kw + "'", section.pos);
      }
    }
    // Actions may reference predicates declared later in the file.
    for (const SExpr* a : actions) parse_action(*a);
    return std::move(domain_);
  }

 private:
  void parse_requirements(const SExpr& section) {
    static const std::set<std::string, std::less<>> supported = {
        ":strips", ":typing", ":negative-preconditions", ":equality"};
    for (std::size_t i = 1; i < section.items.size(); ++i) {
      const SExpr& r = section.items[i];
      if (r.is_list) throw ParseError("expected a requirement flag", r.pos);
      if (!supported.contains(r.word)) throw UnsupportedConstruct(r.word, r.pos);
      domain_.requirements.push_back(r.word);
    }
  }

  void parse_types(const SExpr& section) {
    auto entries = parse_typed_list(section.items, 1, [](const SExpr& e) -> const std::string& {
      return expect_name(e, "a type name");
    });
    for (const auto& [tn, pos, type_pos] : entries) {
      try {
        domain_.types.add(tn.name, tn.type);
      } catch (const std::invalid_argument& ex) {
        throw ParseError(ex.what(), pos);
      }
    }
  }

  void require_type(const std::string& type, SourcePos pos) const {
    if (!domain_.types.contains(type)) throw ParseError("undeclared type '" + type + "'", pos);
  }

  void parse_constants(const SExpr& section) {
    auto entries = parse_typed_list(section.items, 1, [](const SExpr& e) -> const std::string& {
      return expect_name(e, "a constant name");
    });
    for (const auto& [tn, pos, type_pos] : entries) {
      require_type(tn.type, type_pos);
      if (domain_.find_constant(tn.name) != nullptr) {
        throw ParseError("duplicate constant '" + tn.name + "'", pos);
      }
      domain_.constants.push_back(tn);
    }
  }

  std::vector<TypedName> parse_parameters(const SExpr& list, std::size_t start) const {
    auto entries = parse_typed_list(list.items, start, [](const SExpr& e) -> const std::string& {
      if (e.is_list || !is_variable(e.word) || !is_valid_name(std::string_view(e.word).substr(1))) {
        throw ParseError("expected a variable", e.pos);
      }
      return e.word;
    });
    std::vector<TypedName> params;
    std::set<std::string> seen;
    for (const auto& [tn, pos, type_pos] : entries) {
      require_type(tn.type, type_pos);
      if (!seen.insert(tn.name).second) throw ParseError("duplicate parameter '" + tn.name + "'", pos);
      params.push_back(tn);
    }
    return params;
  }

  void parse_predicates(const SExpr& section) {
    for (std::size_t i = 1; i < section.items.size(); ++i) {
      const SExpr& p = expect_list(section.items[i], "a predicate declaration");
      if (p.items.empty()) throw ParseError("empty predicate declaration", p.pos);
      PredicateSig sig;
      sig.name = expect_name(p.items[0], "a predicate name");
      sig.params = parse_parameters(p, 1);
      if (domain_.find_predicate(sig.name) != nullptr) {
        throw ParseError("duplicate predicate '" + sig.name + "'", p.pos);
      }
      domain_.predicates.push_back(std::move(sig));
    }
  }

  Atom parse_atom(const SExpr& e, const std::vector<TypedName>& params) const {
    expect_list(e, "an atom");
    if (e.items.empty()) throw ParseError("empty atom", e.pos);
    const SExpr& head = e.items.front();
    if (head.is_list) throw ParseError("expected a predicate name", head.pos);
    if (unsupported_heads().contains(head.word)) unsupported(e);
    Atom atom;
    atom.predicate = head.word;
    for (std::size_t i = 1; i < e.items.size(); ++i) {
      const std::string& t = expect_term(e.items[i]);
      if (is_variable(t)) {
        if (std::none_of(params.begin(), params.end(), [&](const TypedName& p) { return p.name == t; })) {
          throw ParseError("unbound variable '" + t + "'", e.items[i].pos);
        }
      } else if (domain_.find_constant(t) == nullptr) {
        throw ParseError("unknown constant '" + t + "'", e.items[i].pos);
      }
      atom.args.push_back(t);
    }
    if (atom.predicate == kEqualityPredicate) {
      if (atom.args.size() != 2) throw ParseError("'=' takes exactly two terms", e.pos);
      return atom;
    }
    if (!is_valid_name(atom.predicate)) throw ParseError("expected a predicate name", head.pos);
    const PredicateSig* sig = domain_.find_predicate(atom.predicate);
    if (sig == nullptr) throw ParseError("undeclared predicate '" + atom.predicate + "'", head.pos);
    if (sig->arity() != atom.args.size()) {
      throw ParseError("predicate '" + atom.predicate + "' expects " + std::to_string(sig->arity()) +
                           " arguments, got " + std::to_string(atom.args.size()),
                       e.pos);
    }
    return atom;
  }

  Literal parse_literal(const SExpr& e, const std::vector<TypedName>& params) const {
    if (e.head_is("not")) {
      if (e.items.size() != 2) throw ParseError("'not' takes exactly one atom", e.pos);
      return Literal{parse_atom(e.items[1], params), true};
    }
    return Literal{parse_atom(e, params), false};
  }

  void parse_precondition(const SExpr& e, const std::vector<TypedName>& params,
                          std::vector<Literal>& out) const {
    expect_list(e, "a precondition");
    if (e.items.empty()) return;
    if (e.head_is("and")) {
      for (std::size_t i = 1; i < e.items.size(); ++i) parse_precondition(e.items[i], params, out);
      return;
    }
    out.push_back(parse_literal(e, params));
  }

  void parse_effect(const SExpr& e, const std::vector<TypedName>& params, ActionSchema& action) const {
    expect_list(e, "an effect");
    if (e.items.empty()) return;
    if (e.head_is("and")) {
      for (std::size_t i = 1; i < e.items.size(); ++i) parse_effect(e.items[i], params, action);
      return;
    }
    Literal lit = parse_literal(e, params);
    if (lit.atom.predicate == kEqualityPredicate) throw ParseError("equality in an effect", e.pos);
    (lit.negated ? action.del : action.add).push_back(std::move(lit.atom));
  }

  void parse_action(const SExpr& section) {
    if (section.items.size() < 2) throw ParseError("expected an action name", section.pos);
    ActionSchema action;
    action.name = expect_name(section.items[1], "an action name");
    for (std::size_t i = 2; i < section.items.size(); i += 2) {
      const SExpr& key = section.items[i];
      if (key.is_list) throw ParseError("expected an action keyword", key.pos);
      if (i + 1 >= section.items.size()) throw ParseError("missing value for '" + key.word + "'", key.pos);
      const SExpr& value = section.items[i + 1];
      if (key.word == ":parameters") {
        action.params = parse_parameters(expect_list(value, "a parameter list"), 0);
      } else if (key.word == ":precondition") {
        parse_precondition(value, action.params, action.precondition);
      } else if (key.word == ":effect") {
        parse_effect(value, action.params, action);
      } else if (key.word == ":duration" || key.word == ":condition") {
        throw UnsupportedConstruct(key.word, key.pos);
      } else {
        throw ParseError("unknown action keyword '" + key.word + "'", key.pos);
      }
    }
    if (domain_.find_action(action.name) != nullptr) {
      throw ParseError("duplicate action '" + action.name + "'", section.pos);
    }
    domain_.actions.push_back(std::move(action));
  }

  Domain domain_;
};

// =========================================================================
// Problem
// =========================================================================

class ProblemParser {
 public:
  explicit ProblemParser(const Domain& domain) : domain_(domain) {}

  ProblemSpec parse(const SExpr& root) {
    expect_list(root, "'(define'");
    if (root.items.size() < 2) throw ParseError("expected '(define (problem <name>) ...)'", root.pos);
    expect_keyword(root.items[0], "define");
    const SExpr& header = expect_list(root.items[1], "'(problem <name>)'");
    if (header.items.size() != 2) throw ParseError("expected '(problem <name>)'", header.pos);
    expect_keyword(header.items[0], "problem");
    problem_.name = expect_name(header.items[1], "a problem name");

    bool have_domain = false;
    for (std::size_t i = 2; i < root.items.size(); ++i) {
      const SExpr& section = expect_list(root.items[i], "a problem section");
      if (section.items.empty() || section.items.front().is_list) {
        throw ParseError("expected a section keyword", section.pos);
      }
      const std::string& kw = section.items.front().word;
      if (kw == ":domain") {
        if (section.items.size() != 2) throw ParseError("expected '(:domain <name>)'", section.pos);
        problem_.domain_name = expect_name(section.items[1], "a domain name");
        if (problem_.domain_name != domain_.name) {
          throw SemanticError("problem targets a different domain", problem_.domain_name,
                              section.items[1].pos);
        }
        have_domain = true;
      } else if (kw == ":requirements") {
        continue;
      } else if (kw == ":objects") {
        parse_objects(section);
      } else if (kw == ":init") {
        for (std::size_t j = 1; j < section.items.size(); ++j) {
          const SExpr& a = section.items[j];
          if (a.head_is("not")) throw ParseError("negative literal in ':init'", a.pos);
          if (a.head_is("=")) unsupported(a);
          problem_.init.insert(parse_ground_atom(a));
        }
      } else if (kw == ":goal") {
        if (section.items.size() != 2) throw ParseError("expected exactly one goal formula", section.pos);
        parse_goal(section.items[1]);
      } else if (kw == ":metric" || kw == ":constraints" || kw == ":length") {
        throw UnsupportedConstruct(kw, section.pos);
      } else {
        throw ParseError("unknown problem section '" + kw + "'", section.pos);
      }
    }
    if (!have_domain) throw ParseError("missing '(:domain <name>)'", root.pos);
    problem_.goal = canonical_goal(std::move(problem_.goal));
    return std::move(problem_);
  }

 private:
  void parse_objects(const SExpr& section) {
    auto entries = parse_typed_list(section.items, 1, [](const SExpr& e) -> const std::string& {
      return expect_name(e, "an object name");
    });
    for (const auto& [tn, pos, type_pos] : entries) {
      if (!domain_.types.contains(tn.type)) throw SemanticError("unknown type", tn.type, type_pos);
      if (problem_.find_object(tn.name) != nullptr) throw SemanticError("duplicate object", tn.name, pos);
      if (domain_.find_constant(tn.name) != nullptr) {
        throw SemanticError("object redeclares a domain constant", tn.name, pos);
      }
      problem_.objects.push_back(tn);
    }
  }

  Atom parse_ground_atom(const SExpr& e) const {
    expect_list(e, "a ground atom");
    if (e.items.empty()) throw ParseError("empty atom", e.pos);
    const SExpr& head = e.items.front();
    if (!head.is_list && unsupported_heads().contains(head.word)) unsupported(e);
    Atom atom;
    atom.predicate = expect_name(head, "a predicate name");
    for (std::size_t i = 1; i < e.items.size(); ++i) {
      atom.args.push_back(expect_name(e.items[i], "an object name"));
    }
    const PredicateSig* sig = domain_.find_predicate(atom.predicate);
    if (sig == nullptr) throw SemanticError("unknown predicate", atom.predicate, head.pos);
    if (sig->arity() != atom.args.size()) {
      throw SemanticError("arity mismatch (expected " + std::to_string(sig->arity()) + ", got " +
                              std::to_string(atom.args.size()) + ")",
                          render_atom(atom), e.pos);
    }
    for (std::size_t i = 0; i < atom.args.size(); ++i) {
      const std::string* type = term_type(atom.args[i], problem_, domain_);
      if (type == nullptr) throw SemanticError("undeclared object", atom.args[i], e.items[i + 1].pos);
      if (!domain_.types.is_subtype(*type, sig->params[i].type)) {
        throw SemanticError("type mismatch for slot " + std::to_string(i + 1) + " of '" + sig->name + "'",
                            atom.args[i], e.items[i + 1].pos);
      }
    }
    return atom;
  }

  void parse_goal(const SExpr& e) {
    expect_list(e, "a goal formula");
    if (e.items.empty()) return;
    if (e.head_is("and")) {
      for (std::size_t i = 1; i < e.items.size(); ++i) parse_goal(e.items[i]);
      return;
    }
    if (e.head_is("not")) {
      if (e.items.size() != 2) throw ParseError("'not' takes exactly one atom", e.pos);
      if (e.items[1].head_is("=")) unsupported(e.items[1]);
      problem_.goal.push_back(Literal{parse_ground_atom(e.items[1]), true});
      return;
    }
    if (e.head_is("=")) unsupported(e);
    problem_.goal.push_back(Literal{parse_ground_atom(e), false});
  }

  const Domain& domain_;
  ProblemSpec problem_;
};

}  // namespace

Domain parse_domain(std::string_view text) {
  Reader reader(text);
  return DomainParser().parse(reader.read_document());
}

ProblemSpec parse_problem(std::string_view text, const Domain& domain) {
  Reader reader(text);
  return ProblemParser(domain).parse(reader.read_document());
}

}  // namespace duplex::pddl
