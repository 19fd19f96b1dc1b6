#include "hopqa/synthetic.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <random>
#include <stdexcept>

namespace hopqa {

namespace {

const std::vector<std::string> kFirst = {"Alan", "Bella", "Carl",  "Dana",  "Elena", "Frank", "Gina",  "Hugo",  "Iris",
                                         "Jack", "Kate",  "Leo",   "Mira",  "Nora",  "Oscar", "Paula", "Rosa",  "Victor",
                                         "Wanda", "Xavier", "Yara", "Zack"};
const std::vector<std::string> kLast = {"Adams", "Baker", "Cole",  "Diaz",  "Evans", "Fox",   "Grant", "Hayes", "Irwin",
                                        "Jones", "Kent",  "Lopez", "Moore", "Nash",  "Owens", "Price", "Reed",  "Stone",
                                        "Tate",  "Upton", "Vance", "Wells"};
const std::vector<std::string> kSchoolA = {"Oak", "River", "North", "Lake", "Pine",
                                           "Hill", "West", "Bay", "Elm", "Cedar",
                                           "Maple", "Ridge", "Summit", "Valley"};
const std::vector<std::string> kSchoolB = {"Academy",  "College", "Institute", "High School",  "Prep",
                                           "Seminary", "Lyceum",  "Conservatory", "Grammar School", "University"};
const std::vector<std::string> kFilmA = {"Silent", "Golden", "Broken", "Hidden", "Lost",
                                         "Dark",   "Last",   "Red",    "Frozen", "Wild", "Bitter", "Quiet"};
const std::vector<std::string> kFilmB = {"River", "City", "Dream", "Garden", "Road",
                                         "Empire", "Heart", "Storm", "Island", "Mirror", "Harbor", "Tower"};
const std::vector<std::string> kBandA = {"Blue", "Green", "Black",  "White", "Silver",
                                         "Crimson", "Purple", "Yellow", "Grey", "Orange", "Scarlet", "Golden"};
const std::vector<std::string> kBandB = {"Wolves", "Foxes", "Ravens", "Tigers", "Owls",
                                         "Sharks", "Bears", "Hawks",  "Snakes", "Lions", "Eagles", "Crows"};
const std::vector<std::string> kCities = {"Boston",  "Denver",  "Austin",  "Dallas",  "Phoenix",
                                          "Seattle", "Chicago", "Miami",   "Portland", "Atlanta",
                                          "Houston", "Memphis", "Tucson",  "Omaha",   "Reno"};
const std::vector<std::string> kYears = {"1951", "1952", "1953", "1954", "1955", "1956", "1957", "1958",
                                         "1959", "1960", "1961", "1962", "1963", "1964", "1965"};

// Fixed so that partitions are consistent across calls with different seeds.
constexpr std::uint64_t kPartitionSeed = 7919;

std::vector<std::string> combos(const std::vector<std::string>& a, const std::vector<std::string>& b,
                                const std::string& prefix = "") {
  std::vector<std::string> out;
  for (const auto& x : a) {
    for (const auto& y : b) out.push_back(prefix + x + " " + y);
  }
  return out;
}

// Deterministic disjoint slice of an entity table, shuffled with the run seed.
class EntityPool {
 public:
  EntityPool(std::vector<std::string> all, const SyntheticOptions& opts, std::mt19937_64& rng) {
    std::mt19937_64 fixed(kPartitionSeed);
    std::shuffle(all.begin(), all.end(), fixed);
    for (std::size_t i = 0; i < all.size(); ++i) {
      if (static_cast<int>(i % static_cast<std::size_t>(opts.num_partitions)) == opts.partition) items_.push_back(all[i]);
    }
    std::shuffle(items_.begin(), items_.end(), rng);
  }
  const std::string& take(const char* what) {
    if (next_ >= items_.size()) throw std::invalid_argument(std::string("synthetic corpus: ran out of ") + what);
    return items_[next_++];
  }

 private:
  std::vector<std::string> items_;
  std::size_t next_ = 0;
};

struct Fact {
  Premise p1;  // subject -> bridge
  Premise p2;  // bridge -> answer
  std::string q1_hard, q1_easy, q2, answer;
  std::string p1_question, bridge;  // single-hop question answered by the bridge entity
  std::string subject;
  int kind = 0;
};

Fact make_fact(int kind, const std::string& subject, const std::string& bridge, const std::string& answer) {
  Fact f;
  f.kind = kind;
  f.subject = subject;
  f.bridge = bridge;
  f.answer = answer;
  switch (kind) {
    case 0:
      f.p1 = Premise::from_sentences(subject, {subject + " is a singer.", " " + subject + " attended " + bridge + "."});
      f.p2 = Premise::from_sentences(bridge, {bridge + " is a school.", " " + bridge + " is located in " + answer + "."});
      f.q1_hard = "Where is the school that " + subject + " attended located?";
      f.q1_easy = "Where is " + bridge + ", the school that " + subject + " attended, located?";
      f.q2 = "Where is " + bridge + " located?";
      f.p1_question = "Which school did " + subject + " attend?";
      break;
    case 1:
      f.p1 = Premise::from_sentences(subject, {subject + " is a film.", " " + subject + " was directed by " + bridge + "."});
      f.p2 = Premise::from_sentences(bridge, {bridge + " is a director.", " " + bridge + " was born in " + answer + "."});
      f.q1_hard = "What year was the director of " + subject + " born in?";
      f.q1_easy = "What year was " + bridge + ", the director of " + subject + ", born in?";
      f.q2 = "What year was " + bridge + " born in?";
      f.p1_question = "Who directed " + subject + "?";
      break;
    default:
      f.p1 = Premise::from_sentences(
          subject, {subject + " is a rock band.", " The bass player of " + subject + " is " + bridge + "."});
      f.p2 = Premise::from_sentences(bridge, {bridge + " is a musician.", " " + bridge + " married " + answer + "."});
      f.q1_hard = "Who did the bass player of " + subject + " marry?";
      f.q1_easy = "Who did " + bridge + ", the bass player of " + subject + ", marry?";
      f.q2 = "Who did " + bridge + " marry?";
      f.p1_question = "Who is the bass player of " + subject + "?";
      break;
  }
  return f;
}

// Same question shape as fact.q2 / fact.p1_question but about another entity.
std::string swap_entity(const std::string& question, const std::string& from, const std::string& to) {
  std::string out = question;
  if (auto pos = out.find(from); pos != std::string::npos) out.replace(pos, from.size(), to);
  return out;
}

SquadExample squad(const std::string& id, const std::string& question, const Premise& p, const std::string& answer) {
  SquadExample ex;
  ex.id = id;
  ex.question = question;
  ex.context = p.paragraph_text;
  if (answer.empty()) {
    ex.is_impossible = true;
    return ex;
  }
  ex.answer_text = answer;
  ex.answer_start = static_cast<std::ptrdiff_t>(ex.context.find(answer));
  if (ex.answer_start < 0) throw std::logic_error("synthetic: answer missing from its paragraph");
  return ex;
}

}  // namespace

SyntheticCorpus make_synthetic_corpus(const SyntheticOptions& opts) {
  if (opts.num_questions < 0 || opts.num_comparison < 0 || opts.num_distractors < 0) {
    throw std::invalid_argument("synthetic corpus: counts must be non-negative");
  }
  if (opts.num_partitions <= 0 || opts.partition < 0 || opts.partition >= opts.num_partitions) {
    throw std::invalid_argument("synthetic corpus: invalid partition");
  }
  std::mt19937_64 rng(opts.seed);
  const auto all_people = combos(kFirst, kLast);
  EntityPool people(all_people, opts, rng);
  EntityPool schools(combos(kSchoolA, kSchoolB), opts, rng);
  EntityPool films(combos(kFilmA, kFilmB, "The "), opts, rng);
  EntityPool bands(combos(kBandA, kBandB, "The "), opts, rng);
  auto pick = [&](const std::vector<std::string>& v) {
    return v[std::uniform_int_distribution<std::size_t>(0, v.size() - 1)(rng)];
  };

  std::vector<Fact> facts;
  for (int i = 0; i < opts.num_questions; ++i) {
    const int kind = i % 3;
    if (kind == 0) {
      facts.push_back(make_fact(0, people.take("people"), schools.take("schools"), pick(kCities)));
    } else if (kind == 1) {
      facts.push_back(make_fact(1, films.take("films"), people.take("people"), pick(kYears)));
    } else {
      const std::string band = bands.take("bands");
      const std::string musician = people.take("people");
      std::string spouse = pick(all_people);
      while (spouse == musician) spouse = pick(all_people);
      facts.push_back(make_fact(2, band, musician, spouse));
    }
  }

  std::vector<Premise> comparison_premises;
  for (int i = 0; i < opts.num_comparison; ++i) {
    const std::string a = people.take("people"), b = people.take("people");
    comparison_premises.push_back(Premise::from_sentences(a, {a + " is a singer.", " " + a + " was born in " + pick(kYears) + "."}));
    comparison_premises.push_back(Premise::from_sentences(b, {b + " is a singer.", " " + b + " was born in " + pick(kYears) + "."}));
  }

  std::vector<const Premise*> pool;
  for (const auto& f : facts) {
    pool.push_back(&f.p1);
    pool.push_back(&f.p2);
  }
  for (const auto& p : comparison_premises) pool.push_back(&p);

  auto distractors_for = [&](const std::vector<const Premise*>& own) {
    std::vector<Premise> out;
    std::vector<std::size_t> order(pool.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t k : order) {
      if (static_cast<int>(out.size()) == opts.num_distractors) break;
      if (std::find(own.begin(), own.end(), pool[k]) != own.end()) continue;
      out.push_back(*pool[k]);
    }
    return out;
  };

  SyntheticCorpus corpus;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (std::size_t i = 0; i < facts.size(); ++i) {
    const Fact& f = facts[i];
    QuestionRecord r;
    r.id = "syn-" + std::to_string(opts.partition) + "-" + std::to_string(i);
    r.question = unit(rng) < opts.easy_fraction ? f.q1_easy : f.q1_hard;
    r.answer = f.answer;
    r.qtype = QuestionType::kBridge;
    r.premises = distractors_for({&f.p1, &f.p2});
    const auto n = r.premises.size() + 1;
    const auto at1 = std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
    r.premises.insert(r.premises.begin() + static_cast<std::ptrdiff_t>(at1), f.p1);
    const auto at2 = std::uniform_int_distribution<std::size_t>(0, n)(rng);
    r.premises.insert(r.premises.begin() + static_cast<std::ptrdiff_t>(at2), f.p2);
    r.supporting_titles = {f.p1.title, f.p2.title};
    corpus.records.push_back(std::move(r));
    corpus.gold_followups.emplace_back(corpus.records.back().id, f.q2);

    // Single-hop questions over both premises, each paired with an
    // unanswerable question of the same shape about another entity.
    const Fact& other = facts[(i + 3) % facts.size()];
    const std::string base = corpus.records.back().id;
    corpus.squad.push_back(squad(base + "-a", f.q2, f.p2, f.answer));
    corpus.squad.push_back(squad(base + "-b", f.p1_question, f.p1, f.bridge));
    if (other.kind == f.kind && &other != &f) {
      corpus.squad.push_back(squad(base + "-c", swap_entity(f.q2, f.bridge, other.bridge), f.p2, ""));
      corpus.squad.push_back(squad(base + "-d", swap_entity(f.p1_question, f.subject, other.subject), f.p1, ""));
    }
  }
  for (int i = 0; i < opts.num_comparison; ++i) {
    const Premise& a = comparison_premises[2 * static_cast<std::size_t>(i)];
    const Premise& b = comparison_premises[2 * static_cast<std::size_t>(i) + 1];
    QuestionRecord r;
    r.id = "syn-" + std::to_string(opts.partition) + "-cmp-" + std::to_string(i);
    r.question = "Who was born first, " + a.title + " or " + b.title + "?";
    r.answer = a.title;
    r.qtype = QuestionType::kComparison;
    r.premises = distractors_for({&a, &b});
    r.premises.insert(r.premises.begin(), b);
    r.premises.insert(r.premises.begin(), a);
    r.supporting_titles = {a.title, b.title};
    corpus.records.push_back(std::move(r));
  }
  return corpus;
}

nlohmann::json hotpotqa_json(const std::vector<QuestionRecord>& records) {
  nlohmann::json root = nlohmann::json::array();
  for (const auto& r : records) {
    nlohmann::json context = nlohmann::json::array();
    for (const auto& p : r.premises) context.push_back({p.title, p.sentences});
    nlohmann::json support = nlohmann::json::array();
    for (const auto& t : r.supporting_titles) support.push_back({t, 1});
    root.push_back({{"_id", r.id},
                    {"question", r.question},
                    {"answer", r.answer},
                    {"type", r.qtype == QuestionType::kBridge ? "bridge" : "comparison"},
                    {"level", "easy"},
                    {"context", context},
                    {"supporting_facts", support}});
  }
  return root;
}

nlohmann::json squad_json(const std::vector<SquadExample>& examples) {
  nlohmann::json paragraphs = nlohmann::json::array();
  for (const auto& ex : examples) {
    nlohmann::json qa = {{"id", ex.id}, {"question", ex.question}, {"is_impossible", ex.is_impossible}};
    qa["answers"] = nlohmann::json::array();
    if (!ex.is_impossible) {
      // Offsets in the file count code points.
      std::size_t cp = 0;
      for (std::size_t b = 0; b < static_cast<std::size_t>(ex.answer_start); ++b) {
        if ((static_cast<unsigned char>(ex.context[b]) & 0xC0) != 0x80) ++cp;
      }
      qa["answers"].push_back({{"text", ex.answer_text}, {"answer_start", cp}});
    }
    paragraphs.push_back({{"context", ex.context}, {"qas", nlohmann::json::array({qa})}});
  }
  return {{"version", "v2.0"}, {"data", nlohmann::json::array({{{"title", "synthetic"}, {"paragraphs", paragraphs}}})}};
}

}  // namespace hopqa
