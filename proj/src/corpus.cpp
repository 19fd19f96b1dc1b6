#include "hopqa/corpus.hpp"

#include "hopqa/error.hpp"
#include "hopqa/textproc.hpp"

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include <filesystem>
#include <fstream>
#include <set>

namespace hopqa {

using nlohmann::json;

Premise Premise::from_sentences(std::string title, std::vector<std::string> sentences) {
  Premise p;
  p.title = std::move(title);
  p.sentences = std::move(sentences);
  for (const auto& s : p.sentences) p.paragraph_text += s;
  return p;
}

std::vector<Premise> BridgeExample::premises() const {
  const std::size_t n = distractors.size() + 2;
  std::vector<Premise> out;
  out.reserve(n);
  std::size_t d = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (i == p1_position) {
      out.push_back(p1_hat);
    } else if (i == p2_position) {
      out.push_back(p2_hat);
    } else {
      out.push_back(distractors.at(d++));
    }
  }
  return out;
}

namespace {

json read_json_file(const std::string& path) {
  if (!std::filesystem::exists(path)) throw MissingArtifactError(path);
  std::ifstream in(path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(path + ": " + e.what());
  }
}

QuestionRecord parse_hotpot_entry(const json& e) {
  QuestionRecord r;
  r.id = e.at("_id").get<std::string>();
  r.question = e.at("question").get<std::string>();
  r.answer = e.at("answer").get<std::string>();
  if (r.answer.empty()) throw ValidationError("empty answer");
  const auto type = e.at("type").get<std::string>();
  if (type == "bridge") {
    r.qtype = QuestionType::kBridge;
  } else if (type == "comparison") {
    r.qtype = QuestionType::kComparison;
  } else {
    throw ParseError("unknown question type '" + type + "'");
  }
  for (const auto& para : e.at("context")) {
    auto sentences = para.at(1).get<std::vector<std::string>>();
    if (sentences.empty()) throw ValidationError("paragraph without sentences");
    r.premises.push_back(Premise::from_sentences(para.at(0).get<std::string>(), std::move(sentences)));
  }
  std::set<std::string> seen;
  for (const auto& fact : e.at("supporting_facts")) {
    auto title = fact.at(0).get<std::string>();
    (void)fact.at(1).get<int>();
    if (seen.insert(title).second) r.supporting_titles.push_back(std::move(title));
  }
  return r;
}

}  // namespace

std::vector<QuestionRecord> parse_hotpotqa(const json& root) {
  if (!root.is_array()) throw ParseError("HotpotQA file must be a top-level array");
  std::vector<QuestionRecord> out;
  out.reserve(root.size());
  for (std::size_t i = 0; i < root.size(); ++i) {
    try {
      out.push_back(parse_hotpot_entry(root[i]));
    } catch (const json::exception& e) {
      throw ParseError("HotpotQA entry " + std::to_string(i) + ": " + e.what());
    } catch (const Error& e) {
      throw ParseError("HotpotQA entry " + std::to_string(i) + ": " + e.what());
    }
  }
  return out;
}

std::vector<QuestionRecord> load_hotpotqa(const std::string& path) { return parse_hotpotqa(read_json_file(path)); }

bool answer_in_premise(const std::string& answer, const Premise& premise) {
  const std::string a = normalize_answer(answer);
  if (a.empty()) return false;
  return normalize_answer(premise.paragraph_text).find(a) != std::string::npos;
}

std::vector<BridgeExample> filter_two_hop_bridge(const std::vector<QuestionRecord>& records, FilterStats* stats) {
  FilterStats local;
  FilterStats& st = stats != nullptr ? *stats : local;
  std::vector<BridgeExample> out;
  for (const auto& r : records) {
    if (r.qtype != QuestionType::kBridge) {
      ++st.dropped_comparison;
      continue;
    }
    if (r.supporting_titles.size() != 2) {
      ++st.dropped_support_count;
      continue;
    }
    std::ptrdiff_t pos[2] = {-1, -1};
    for (int k = 0; k < 2; ++k) {
      for (std::size_t i = 0; i < r.premises.size(); ++i) {
        if (r.premises[i].title == r.supporting_titles[k]) {
          pos[k] = static_cast<std::ptrdiff_t>(i);
          break;
        }
      }
    }
    if (pos[0] < 0 || pos[1] < 0) {
      spdlog::warn("record {}: supporting title not found among premises; skipped", r.id);
      ++st.dropped_missing_title;
      continue;
    }
    const bool in0 = answer_in_premise(r.answer, r.premises[pos[0]]);
    const bool in1 = answer_in_premise(r.answer, r.premises[pos[1]]);
    if (in0 == in1) {
      ++st.dropped_answer_location;
      continue;
    }
    const auto p2 = static_cast<std::size_t>(in0 ? pos[0] : pos[1]);
    const auto p1 = static_cast<std::size_t>(in0 ? pos[1] : pos[0]);
    BridgeExample ex;
    ex.id = r.id;
    ex.q1 = r.question;
    ex.answer = r.answer;
    ex.p1_hat = r.premises[p1];
    ex.p2_hat = r.premises[p2];
    ex.p1_position = p1;
    ex.p2_position = p2;
    for (std::size_t i = 0; i < r.premises.size(); ++i) {
      if (i != p1 && i != p2) ex.distractors.push_back(r.premises[i]);
    }
    out.push_back(std::move(ex));
    ++st.kept;
  }
  return out;
}

namespace {

// Byte offset of the given code-point index in a UTF-8 string, or npos.
std::size_t utf8_byte_offset(const std::string& s, std::size_t codepoints) {
  std::size_t cp = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if ((static_cast<unsigned char>(s[i]) & 0xC0) == 0x80) continue;
    if (cp == codepoints) return i;
    ++cp;
  }
  return cp == codepoints ? s.size() : std::string::npos;
}

}  // namespace

std::vector<SquadExample> parse_squad(const json& root) {
  std::vector<SquadExample> out;
  try {
    for (const auto& article : root.at("data")) {
      for (const auto& para : article.at("paragraphs")) {
        const auto context = para.at("context").get<std::string>();
        for (const auto& qa : para.at("qas")) {
          SquadExample ex;
          ex.id = qa.at("id").get<std::string>();
          ex.question = qa.at("question").get<std::string>();
          ex.context = context;
          ex.is_impossible = qa.value("is_impossible", false);
          if (!ex.is_impossible) {
            const auto& answers = qa.at("answers");
            if (answers.empty()) throw ParseError("question " + ex.id + " has no answers");
            ex.answer_text = answers.at(0).at("text").get<std::string>();
            const auto cp = answers.at(0).at("answer_start").get<std::size_t>();
            const std::size_t start = utf8_byte_offset(context, cp);
            if (start == std::string::npos || context.compare(start, ex.answer_text.size(), ex.answer_text) != 0) {
              throw ValidationError("question " + ex.id + ": answer_start does not match answer text in context");
            }
            ex.answer_start = static_cast<std::ptrdiff_t>(start);
          }
          out.push_back(std::move(ex));
        }
      }
    }
  } catch (const json::exception& e) {
    throw ParseError(std::string("SQuAD file: ") + e.what());
  }
  return out;
}

std::vector<SquadExample> load_squad(const std::string& path) { return parse_squad(read_json_file(path)); }

json to_json(const Premise& p) { return json{{"title", p.title}, {"sentences", p.sentences}}; }

Premise premise_from_json(const json& j) {
  return Premise::from_sentences(j.at("title").get<std::string>(), j.at("sentences").get<std::vector<std::string>>());
}

json to_json(const BridgeExample& ex) {
  json d = json::array();
  for (const auto& p : ex.distractors) d.push_back(to_json(p));
  return json{{"id", ex.id},
              {"q1", ex.q1},
              {"answer", ex.answer},
              {"p1_hat", to_json(ex.p1_hat)},
              {"p2_hat", to_json(ex.p2_hat)},
              {"p1_position", ex.p1_position},
              {"p2_position", ex.p2_position},
              {"distractors", d}};
}

BridgeExample bridge_example_from_json(const json& j) {
  BridgeExample ex;
  ex.id = j.at("id").get<std::string>();
  ex.q1 = j.at("q1").get<std::string>();
  ex.answer = j.at("answer").get<std::string>();
  ex.p1_hat = premise_from_json(j.at("p1_hat"));
  ex.p2_hat = premise_from_json(j.at("p2_hat"));
  ex.p1_position = j.at("p1_position").get<std::size_t>();
  ex.p2_position = j.at("p2_position").get<std::size_t>();
  for (const auto& d : j.at("distractors")) ex.distractors.push_back(premise_from_json(d));
  return ex;
}

void write_bridge_examples(std::ostream& out, const std::vector<BridgeExample>& examples) {
  for (const auto& ex : examples) out << to_json(ex).dump() << '\n';
}

std::vector<BridgeExample> read_bridge_examples(std::istream& in) {
  std::vector<BridgeExample> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      out.push_back(bridge_example_from_json(json::parse(line)));
    } catch (const json::exception& e) {
      throw ParseError("bridge example line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

std::vector<BridgeExample> read_bridge_examples(const std::string& path) {
  if (!std::filesystem::exists(path)) throw MissingArtifactError(path);
  std::ifstream in(path);
  return read_bridge_examples(in);
}

}  // namespace hopqa
