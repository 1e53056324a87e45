#include "aglab/corpus.hpp"

#include <fstream>
#include <istream>
#include <ostream>
#include <set>

#include <json.hpp>

namespace aglab {

using nlohmann::json;

AgreementTriple GoldClause::agreement() const {
  AgreementTriple t;
  for (const auto& a : argument_attachments) t[a.role] = to_arg_number(a.number);
  if (dropped_ergative) t.erg = to_arg_number(*dropped_ergative);
  return t;
}

std::string text(std::span<const Token> tokens) {
  std::string out;
  for (const auto& t : tokens) {
    if (!out.empty()) out += ' ';
    out += t.surface;
  }
  return out;
}

std::string text(const Sentence& s) { return text(std::span<const Token>(s.tokens)); }

bool is_single_verb(std::span<const Token> tokens) {
  std::size_t aux = 0, main = 0;
  for (const auto& t : tokens) {
    if (t.is_auxiliary) {
      ++aux;
    } else if (t.is_verb) {
      ++main;
    }
  }
  return aux == 1 && main <= 1;
}

std::size_t count_auxiliaries(std::span<const Token> tokens) {
  std::size_t n = 0;
  for (const auto& t : tokens) n += t.is_auxiliary ? 1 : 0;
  return n;
}

namespace {

json token_to_json(const Token& t) {
  json j;
  j["surface"] = t.surface;
  j["lemma"] = t.lemma;
  j["is_verb"] = t.is_verb;
  j["is_auxiliary"] = t.is_auxiliary;
  j["nuclear"] = std::string(to_string(t.nuclear));
  j["gold_case"] = t.gold_case ? json(std::string(to_string(*t.gold_case))) : json(nullptr);
  j["gold_number"] =
      t.gold_number ? json(std::string(to_string(*t.gold_number))) : json(nullptr);
  if (t.pos) j["pos"] = *t.pos;
  if (t.dep_label) j["dep_label"] = *t.dep_label;
  if (t.case_tag) j["case_tag"] = *t.case_tag;
  if (t.head) j["head"] = *t.head;
  return j;
}

template <class T, class Parse>
std::optional<T> optional_enum(const json& j, const char* key, Parse parse, std::size_t line) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  const auto s = j.at(key).get<std::string>();
  auto v = parse(s);
  if (!v) throw ParseError(line, std::string("bad value for ") + key + ": " + s);
  return v;
}

std::optional<std::string> optional_string(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<std::string>();
}

Token token_from_json(const json& j, std::size_t line) {
  Token t;
  t.surface = j.at("surface").get<std::string>();
  t.lemma = j.at("lemma").get<std::string>();
  t.is_verb = j.value("is_verb", false);
  t.is_auxiliary = j.value("is_auxiliary", false);
  const auto nuclear = j.value("nuclear", std::string("none"));
  auto s = parse_nuclear_suffix(nuclear);
  if (!s) throw ParseError(line, "bad nuclear suffix: " + nuclear);
  t.nuclear = *s;
  t.gold_case = optional_enum<CaseRole>(j, "gold_case", parse_case_role, line);
  t.gold_number = optional_enum<NumberTag>(j, "gold_number", parse_number_tag, line);
  t.pos = optional_string(j, "pos");
  t.dep_label = optional_string(j, "dep_label");
  t.case_tag = optional_string(j, "case_tag");
  if (j.contains("head") && !j.at("head").is_null()) t.head = j.at("head").get<int>();
  return t;
}

}  // namespace

std::string sentence_to_json_line(const Sentence& s) {
  json j;
  j["id"] = s.id;
  json toks = json::array();
  for (const auto& t : s.tokens) toks.push_back(token_to_json(t));
  j["tokens"] = std::move(toks);
  if (s.gold_clauses) {
    json clauses = json::array();
    for (const auto& c : *s.gold_clauses) {
      json cj;
      cj["verb"] = c.verb_index;
      cj["main_verb"] = c.main_verb_index;
      json args = json::array();
      for (const auto& a : c.argument_attachments) {
        args.push_back(json::array({a.position, std::string(to_string(a.role)),
                                    std::string(to_string(a.number))}));
      }
      cj["args"] = std::move(args);
      cj["transitive"] = c.transitive;
      cj["finite"] = c.finite;
      cj["dropped_erg"] = c.dropped_ergative
                              ? json(std::string(to_string(*c.dropped_ergative)))
                              : json(nullptr);
      clauses.push_back(std::move(cj));
    }
    j["clauses"] = std::move(clauses);
  }
  return j.dump();
}

Sentence sentence_from_json_line(std::string_view line, std::size_t lineno) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::exception& e) {
    throw ParseError(lineno, std::string("invalid JSON: ") + e.what());
  }
  try {
    Sentence s;
    s.id = j.at("id").get<std::string>();
    for (const auto& tj : j.at("tokens")) s.tokens.push_back(token_from_json(tj, lineno));
    if (j.contains("clauses") && !j.at("clauses").is_null()) {
      std::vector<GoldClause> clauses;
      for (const auto& cj : j.at("clauses")) {
        GoldClause c;
        c.verb_index = cj.at("verb").get<int>();
        c.main_verb_index = cj.value("main_verb", -1);
        c.transitive = cj.value("transitive", false);
        c.finite = cj.value("finite", true);
        for (const auto& aj : cj.at("args")) {
          Attachment a;
          a.position = aj.at(0).get<int>();
          auto role = parse_case_role(aj.at(1).get<std::string>());
          auto num = parse_number_tag(aj.at(2).get<std::string>());
          if (!role || !num) throw ParseError(lineno, "bad clause argument");
          a.role = *role;
          a.number = *num;
          c.argument_attachments.push_back(a);
        }
        c.dropped_ergative =
            optional_enum<NumberTag>(cj, "dropped_erg", parse_number_tag, lineno);
        clauses.push_back(std::move(c));
      }
      s.gold_clauses = std::move(clauses);
    }
    return s;
  } catch (const json::exception& e) {
    throw ParseError(lineno, std::string("malformed sentence: ") + e.what());
  }
}

void write_corpus_jsonl(std::ostream& out, std::span<const Sentence> sentences) {
  for (const auto& s : sentences) out << sentence_to_json_line(s) << '\n';
}

void write_corpus_jsonl(const std::filesystem::path& path, std::span<const Sentence> sentences) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write corpus " + path.string());
  write_corpus_jsonl(out, sentences);
}

std::vector<Sentence> read_corpus_jsonl(std::istream& in) {
  std::vector<Sentence> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    out.push_back(sentence_from_json_line(line, lineno));
  }
  return out;
}

std::vector<Sentence> read_corpus_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open corpus " + path.string());
  return read_corpus_jsonl(in);
}

void validate_sentence(const Sentence& s) {
  if (s.tokens.empty()) throw InvalidInput("sentence " + s.id + " has no tokens");
  for (const auto& t : s.tokens) {
    if (t.is_auxiliary && !t.is_verb) {
      throw InvalidInput("sentence " + s.id + ": auxiliary not flagged as verb");
    }
  }
  if (!s.gold_clauses) return;
  const int n = static_cast<int>(s.tokens.size());
  std::set<int> attached;
  for (const auto& c : *s.gold_clauses) {
    if (c.verb_index < 0 || c.verb_index >= n) {
      throw InvalidInput("sentence " + s.id + ": clause verb out of range");
    }
    const auto& v = s.tokens[static_cast<std::size_t>(c.verb_index)];
    if (c.finite && !v.is_auxiliary) {
      throw InvalidInput("sentence " + s.id + ": clause verb is not an auxiliary");
    }
    if (!c.finite && (!v.is_verb || v.is_auxiliary)) {
      throw InvalidInput("sentence " + s.id + ": non-finite clause verb is not a main verb");
    }
    for (const auto& a : c.argument_attachments) {
      if (a.position < 0 || a.position >= n) {
        throw InvalidInput("sentence " + s.id + ": attachment out of range");
      }
      if (!attached.insert(a.position).second) {
        throw InvalidInput("sentence " + s.id + ": position attached to two clauses");
      }
    }
  }
}

}  // namespace aglab
