// Copyright 2026 The ragval Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "ragval/testgen/testgen.h"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>
#include <set>

#include "ragval/common/error.h"
#include "ragval/common/hash.h"
#include "ragval/common/io.h"
#include "ragval/common/random.h"
#include "ragval/common/text.h"
#include "ragval/metrics/functional.h"

namespace ragval::testgen {

using nlohmann::json;

namespace {

// Same text as data/prompts/<type>.txt.
constexpr std::string_view kSimpleFactualPrompt =
    "You are writing evaluation questions for a retrieval-augmented assistant.\n"
    "Write one simple factual question that the statement below answers directly.\n"
    "Return only the question.\n"
    "Q about: {fact}\n";
constexpr std::string_view kMultiHopPrompt =
    "You are writing evaluation questions for a retrieval-augmented assistant.\n"
    "Write one question that can only be answered by combining both statements below.\n"
    "Return only the question.\n"
    "Multi-hop about: {fact_a} || {fact_b}\n";
constexpr std::string_view kInferencePrompt =
    "You are writing evaluation questions for a retrieval-augmented assistant.\n"
    "Write one question that requires reasoning beyond the literal text of the statement below.\n"
    "Return only the question.\n"
    "Inference about: {fact}\n";
constexpr std::string_view kYesNoPrompt =
    "You are writing evaluation questions for a retrieval-augmented assistant.\n"
    "Rewrite the statement below as a yes/no question.\n"
    "Return only the question.\n"
    "Yes/no about: {fact}\n";
constexpr std::string_view kMultipleChoicePrompt =
    "You are writing evaluation questions for a retrieval-augmented assistant.\n"
    "Write one multiple-choice question whose correct option is the statement below.\n"
    "Return only the question with its options.\n"
    "Choice about: {fact}\n";

constexpr std::array<std::string_view, 16> kDefinitionalVerbs = {
    "allows", "are",      "charges", "consists", "defined",  "has",     "have",  "include",
    "includes", "is",     "means",   "offers",   "provides", "refers",  "require", "requires"};

std::string fact_key(QueryType t) { return std::string(query_type_name(t)); }

bool is_definitional(const std::string& lower) {
  return std::find(kDefinitionalVerbs.begin(), kDefinitionalVerbs.end(), lower) !=
         kDefinitionalVerbs.end();
}

std::string query_id_for(const std::string& stratum, const std::vector<std::string>& chunks,
                         QueryType type, const std::string& text) {
  std::string key = stratum + "|" + text::join(chunks, ",") + "|" + fact_key(type) + "|" + text;
  return "q" + sha256_hex(key).substr(0, 12);
}

bool canonical_less(const TestQuery& a, const TestQuery& b) {
  if (a.stratum_id != b.stratum_id) return a.stratum_id < b.stratum_id;
  if (a.source_chunk_ids != b.source_chunk_ids) return a.source_chunk_ids < b.source_chunk_ids;
  if (a.query_type != b.query_type) return a.query_type < b.query_type;
  return a.text < b.text;
}

}  // namespace

std::string_view query_type_name(QueryType type) {
  switch (type) {
    case QueryType::kSimpleFactual:
      return "simple_factual";
    case QueryType::kMultiHop:
      return "multi_hop";
    case QueryType::kInference:
      return "inference";
    case QueryType::kYesNo:
      return "yes_no";
    case QueryType::kMultipleChoice:
      return "multiple_choice";
  }
  return "?";
}

QueryType parse_query_type(std::string_view name) {
  for (QueryType t : kAllQueryTypes) {
    if (query_type_name(t) == name) return t;
  }
  throw InvalidArgument("unknown query type \"" + std::string(name) + "\"");
}

void SamplingSpec::validate() const {
  if (total_budget < 1) throw InvalidArgument("sampling: total_budget must be >= 1");
  if (mode == SamplingMode::kWeighted) {
    bool any = false;
    for (const auto& [id, w] : weights) {
      if (!(w >= 0.0) || !std::isfinite(w)) {
        throw InvalidArgument("sampling: weight for " + id + " must be finite and >= 0");
      }
      any = any || w > 0.0;
    }
    if (!any) throw InvalidArgument("sampling: weighted mode needs a positive weight");
  }
}

json TestQuery::to_json() const {
  return {{"query_id", query_id},
          {"text", text},
          {"query_type", query_type_name(query_type)},
          {"stratum_id", stratum_id},
          {"source_chunk_ids", source_chunk_ids},
          {"key_facts", key_facts},
          {"ood", ood}};
}

TestQuery TestQuery::from_json(const json& j) {
  TestQuery q;
  q.query_id = j.at("query_id").get<std::string>();
  q.text = j.at("text").get<std::string>();
  q.query_type = parse_query_type(j.at("query_type").get<std::string>());
  q.stratum_id = j.value("stratum_id", "");
  q.source_chunk_ids = j.value("source_chunk_ids", std::vector<std::string>{});
  q.key_facts = j.value("key_facts", std::vector<std::string>{});
  q.ood = j.value("ood", false);
  return q;
}

std::vector<std::size_t> allocate_budget(std::span<const std::size_t> sizes,
                                         std::span<const double> shares, std::size_t budget) {
  const std::size_t n = sizes.size();
  if (shares.size() != n) throw InvalidArgument("allocate_budget: sizes and shares differ");
  std::vector<std::size_t> alloc(n, 0);
  std::vector<bool> open(n, false);
  std::size_t nonempty = 0;
  double share_total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!(shares[i] >= 0.0) || !std::isfinite(shares[i])) {
      throw InvalidArgument("allocate_budget: shares must be finite and >= 0");
    }
    if (sizes[i] == 0) continue;
    open[i] = true;
    ++nonempty;
    share_total += shares[i];
  }
  if (nonempty == 0) throw InvalidArgument("allocate_budget: no non-empty stratum");
  if (budget < nonempty) {
    throw InvalidArgument("allocate_budget: budget " + std::to_string(budget) + " < " +
                          std::to_string(nonempty) +
                          " strata; raise the budget or merge strata");
  }
  if (!(share_total > 0.0)) throw InvalidArgument("allocate_budget: all shares are zero");

  // Pin strata whose quota is below one, then re-apportion the rest.
  std::size_t remaining = budget;
  while (true) {
    double w = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (open[i]) w += shares[i];
    }
    bool pinned = false;
    for (std::size_t i = 0; i < n; ++i) {
      if (!open[i]) continue;
      const double quota = w > 0.0 ? static_cast<double>(remaining) * shares[i] / w : 0.0;
      if (quota < 1.0) {
        alloc[i] = 1;
        open[i] = false;
        pinned = true;
      }
    }
    if (!pinned) break;
    remaining = budget;
    for (std::size_t i = 0; i < n; ++i) {
      if (!open[i]) remaining -= alloc[i];
    }
  }
  double w = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (open[i]) w += shares[i];
  }
  if (w > 0.0) {
    std::vector<std::pair<double, std::size_t>> fractions;
    std::size_t handed = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (!open[i]) continue;
      const double quota = static_cast<double>(remaining) * shares[i] / w;
      const auto whole = static_cast<std::size_t>(std::floor(quota));
      alloc[i] = whole;
      handed += whole;
      fractions.emplace_back(quota - static_cast<double>(whole), i);
    }
    std::stable_sort(fractions.begin(), fractions.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    for (std::size_t u = 0; handed < remaining; ++u, ++handed) {
      ++alloc[fractions[u % fractions.size()].second];
    }
  }
  return alloc;
}

std::map<std::string, std::size_t> allocate_budget(const std::vector<topics::Stratum>& strata,
                                                   const SamplingSpec& spec) {
  spec.validate();
  std::vector<const topics::Stratum*> eligible;
  for (const auto& s : strata) {
    if (!s.is_noise) eligible.push_back(&s);
  }
  if (eligible.empty()) throw InvalidArgument("allocate_budget: no non-noise stratum");
  std::vector<std::size_t> sizes;
  std::vector<double> shares;
  for (const auto* s : eligible) {
    sizes.push_back(s->chunk_ids.size());
    if (spec.mode == SamplingMode::kProportional) {
      shares.push_back(static_cast<double>(s->chunk_ids.size()));
    } else {
      auto it = spec.weights.find(s->stratum_id);
      shares.push_back(it == spec.weights.end() ? 0.0 : it->second);
    }
  }
  const auto alloc = allocate_budget(sizes, shares, spec.total_budget);
  std::map<std::string, std::size_t> out;
  for (std::size_t i = 0; i < eligible.size(); ++i) out[eligible[i]->stratum_id] = alloc[i];
  return out;
}

std::vector<std::string> sample_chunks(const topics::Stratum& stratum, std::size_t count,
                                       std::uint64_t seed) {
  const std::size_t size = stratum.chunk_ids.size();
  if (count > size) {
    throw InvalidArgument("sample_chunks: count " + std::to_string(count) +
                          " exceeds stratum size " + std::to_string(size));
  }
  std::vector<std::size_t> order(size);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  // Partial Fisher-Yates: the first `count` slots are a uniform sample.
  for (std::size_t i = 0; i < count; ++i) {
    std::swap(order[i], order[i + rng.index(size - i)]);
  }
  order.resize(count);
  std::sort(order.begin(), order.end());
  std::vector<std::string> out;
  out.reserve(count);
  for (std::size_t i : order) out.push_back(stratum.chunk_ids[i]);
  return out;
}

std::vector<std::string> extract_key_facts(const corpus::Chunk& chunk) {
  std::vector<std::string> facts;
  for (const auto& s : chunk.sentences) {
    const std::string_view t = text::trim(s.text);
    if (t.empty() || t.back() != '.') continue;
    std::vector<std::string> words;
    {
      std::string cur;
      for (char c : t) {
        if (text::is_space(c)) {
          if (!cur.empty()) words.push_back(std::move(cur));
          cur.clear();
        } else {
          cur.push_back(c);
        }
      }
      if (!cur.empty()) words.push_back(std::move(cur));
    }
    if (words.size() < 3) continue;
    bool fact = std::any_of(t.begin(), t.end(),
                            [](char c) { return std::isdigit(static_cast<unsigned char>(c)); });
    for (std::size_t i = 0; i < words.size() && !fact; ++i) {
      const auto lower = text::word_tokens(words[i]);
      if (i > 0 && std::isupper(static_cast<unsigned char>(words[i][0]))) fact = true;
      for (const auto& w : lower) fact = fact || is_definitional(w);
    }
    if (fact) facts.emplace_back(t);
  }
  return facts;
}

PromptTemplates PromptTemplates::defaults() {
  PromptTemplates t;
  t.templates_[QueryType::kSimpleFactual] = std::string(kSimpleFactualPrompt);
  t.templates_[QueryType::kMultiHop] = std::string(kMultiHopPrompt);
  t.templates_[QueryType::kInference] = std::string(kInferencePrompt);
  t.templates_[QueryType::kYesNo] = std::string(kYesNoPrompt);
  t.templates_[QueryType::kMultipleChoice] = std::string(kMultipleChoicePrompt);
  return t;
}

PromptTemplates PromptTemplates::load(const std::filesystem::path& dir) {
  PromptTemplates t;
  for (QueryType type : kAllQueryTypes) {
    t.set(type, io::read_file(dir / (std::string(query_type_name(type)) + ".txt")));
  }
  return t;
}

const std::string& PromptTemplates::get(QueryType type) const { return templates_.at(type); }

void PromptTemplates::set(QueryType type, std::string text) {
  const bool multi = type == QueryType::kMultiHop;
  const bool ok = multi ? text.find("{fact_a}") != std::string::npos &&
                              text.find("{fact_b}") != std::string::npos
                        : text.find("{fact}") != std::string::npos;
  if (!ok) {
    throw InvalidArgument("prompt template for " + std::string(query_type_name(type)) +
                          (multi ? " needs {fact_a} and {fact_b}" : " needs {fact}"));
  }
  templates_[type] = std::move(text);
}

std::string PromptTemplates::render(QueryType type, const std::vector<std::string>& facts) const {
  std::string out = get(type);
  auto replace_all = [&out](std::string_view key, const std::string& value) {
    for (std::size_t pos = out.find(key); pos != std::string::npos;
         pos = out.find(key, pos + value.size())) {
      out.replace(pos, key.size(), value);
    }
  };
  if (type == QueryType::kMultiHop) {
    if (facts.size() < 2) throw InvalidArgument("multi_hop prompt needs two facts");
    replace_all("{fact_a}", facts[0]);
    replace_all("{fact_b}", facts[1]);
  } else {
    if (facts.empty()) throw InvalidArgument("prompt needs a fact");
    replace_all("{fact}", facts[0]);
  }
  return out;
}

json SkipRecord::to_json() const {
  return {{"chunk_ids", chunk_ids}, {"query_type", query_type}, {"reason", reason}};
}

std::vector<TestQuery> generate_queries(const std::vector<const corpus::Chunk*>& chunks,
                                        std::span<const QueryType> types,
                                        providers::Generator& generator,
                                        const PromptTemplates& templates,
                                        const std::string& stratum_id,
                                        std::vector<SkipRecord>* skips,
                                        std::size_t fact_offset) {
  if (chunks.empty() || chunks.front() == nullptr) {
    throw InvalidArgument("generate_queries: no chunk given");
  }
  std::vector<TestQuery> out;
  auto skip = [&](std::vector<std::string> ids, QueryType t, std::string why) {
    if (skips) skips->push_back({std::move(ids), fact_key(t), std::move(why)});
  };
  const auto first_facts = extract_key_facts(*chunks[0]);
  for (QueryType type : types) {
    TestQuery q;
    q.query_type = type;
    q.stratum_id = stratum_id;
    std::vector<std::string> facts;
    if (type == QueryType::kMultiHop) {
      if (chunks.size() < 2 || chunks[1] == nullptr) {
        skip({chunks[0]->chunk_id}, type, "multi_hop needs two source chunks");
        continue;
      }
      const auto second_facts = extract_key_facts(*chunks[1]);
      if (first_facts.empty() || second_facts.empty()) {
        skip({chunks[0]->chunk_id, chunks[1]->chunk_id}, type, "no extractable fact");
        continue;
      }
      facts = {first_facts[fact_offset % first_facts.size()],
               second_facts[fact_offset % second_facts.size()]};
      q.source_chunk_ids = {chunks[0]->chunk_id, chunks[1]->chunk_id};
    } else {
      if (first_facts.empty()) {
        skip({chunks[0]->chunk_id}, type, "no extractable fact");
        continue;
      }
      facts = {first_facts[fact_offset % first_facts.size()]};
      q.source_chunk_ids = {chunks[0]->chunk_id};
    }
    const std::string prompt = templates.render(type, facts);
    try {
      q.text = std::string(text::trim(providers::generate(generator, prompt)));
    } catch (const providers::ProviderError& e) {
      throw providers::ProviderError("generation for chunk " + q.source_chunk_ids.front() +
                                     " failed: " + e.what());
    }
    q.key_facts = std::move(facts);
    q.query_id = query_id_for(stratum_id, q.source_chunk_ids, type, q.text);
    out.push_back(std::move(q));
  }
  return out;
}

Selection select_queries(const std::vector<TestQuery>& queries, const corpus::Corpus& corpus,
                         providers::Embedder& embedder, double tau) {
  if (!(tau >= -1.0 && tau <= 1.0)) throw InvalidArgument("select_queries: tau outside [-1, 1]");
  Selection sel;
  for (const auto& q : queries) {
    std::vector<std::string> context;
    for (const auto& id : q.source_chunk_ids) {
      const corpus::Chunk* c = corpus.find_chunk(id);
      if (!c) throw InvalidArgument("query " + q.query_id + " cites unknown chunk " + id);
      for (const auto& s : c->sentences) {
        if (!text::trim(s.text).empty()) context.push_back(s.text);
      }
    }
    std::vector<std::string> query_sents;
    for (const auto& s : corpus::segment_sentences(q.text)) {
      if (!text::trim(s.text).empty()) query_sents.push_back(s.text);
    }
    if (query_sents.empty() || context.empty()) {
      sel.rejected.push_back({q, -1.0});
      continue;
    }
    const auto qs = metrics::make_sentence_set(metrics::Role::kQuery, query_sents, embedder);
    const auto cs = metrics::make_sentence_set(metrics::Role::kContext, context, embedder);
    const double score =
        metrics::context_relevancy(qs, cs, metrics::Aggregation::kMean).value;
    if (score >= tau) {
      sel.accepted.push_back(q);
      sel.accepted_scores.push_back(score);
    } else {
      sel.rejected.push_back({q, score});
    }
  }
  return sel;
}

std::string TestSet::queries_jsonl() const {
  std::vector<json> rows;
  for (const auto& q : queries) rows.push_back(q.to_json());
  return io::to_jsonl(rows);
}

json TestSet::report_json() const {
  json rejected_json = json::array();
  for (const auto& r : rejected) {
    rejected_json.push_back({{"query", r.query.to_json()}, {"score", r.score}});
  }
  json skips_json = json::array();
  for (const auto& s : skips) skips_json.push_back(s.to_json());
  std::map<std::string, std::size_t> per_stratum;
  for (const auto& q : queries) ++per_stratum[q.stratum_id];
  return {{"allocation", allocation},
          {"accepted_per_stratum", per_stratum},
          {"accepted", queries.size()},
          {"rejected", std::move(rejected_json)},
          {"skipped", std::move(skips_json)}};
}

std::vector<TestQuery> load_queries_jsonl(std::string_view t) {
  std::vector<TestQuery> out;
  for (const auto& row : io::parse_jsonl(t, "queries.jsonl")) out.push_back(TestQuery::from_json(row));
  return out;
}

TestSet build_test_set(const corpus::Corpus& corpus, const std::vector<topics::Stratum>& strata,
                       const TestgenConfig& config, providers::Generator& generator,
                       providers::Embedder& embedder, const PromptTemplates& templates) {
  if (config.types.empty()) throw InvalidArgument("testgen: no query types requested");
  TestSet set;
  set.allocation = allocate_budget(strata, config.sampling);
  std::vector<TestQuery> generated;
  std::set<std::string> seen_text;
  std::size_t stratum_ordinal = 0;
  for (const auto& stratum : strata) {
    if (stratum.is_noise) continue;
    const std::size_t want = set.allocation.at(stratum.stratum_id);
    const std::size_t ordinal = stratum_ordinal++;
    if (want == 0) continue;
    const std::uint64_t seed = mix64(config.sampling.seed ^ fnv1a64(stratum.stratum_id));
    const auto picked =
        sample_chunks(stratum, std::min(want, stratum.chunk_ids.size()), seed);
    std::vector<const corpus::Chunk*> chunks;
    for (const auto& id : picked) chunks.push_back(corpus.find_chunk(id));
    for (std::size_t q = 0; q < want; ++q) {
      const QueryType type = config.types[(q + ordinal) % config.types.size()];
      const std::size_t c = q % chunks.size();
      std::vector<const corpus::Chunk*> sources = {chunks[c]};
      QueryType effective = type;
      if (type == QueryType::kMultiHop) {
        const corpus::Chunk* partner = nullptr;
        if (chunks.size() >= 2) {
          partner = chunks[(c + 1) % chunks.size()];
        } else {
          for (const auto& id : stratum.chunk_ids) {
            if (id != chunks[c]->chunk_id) {
              partner = corpus.find_chunk(id);
              break;
            }
          }
        }
        if (partner) {
          sources.push_back(partner);
        } else {
          set.skips.push_back({{chunks[c]->chunk_id}, "multi_hop",
                               "stratum has one chunk; generated simple_factual instead"});
          effective = QueryType::kSimpleFactual;
        }
      }
      const std::array<QueryType, 1> one = {effective};
      // Rotate facts until the text is new (exact-text dedup).
      const std::size_t rotations = std::max<std::size_t>(1, chunks[c]->sentences.size());
      bool placed = false;
      bool skipped = false;
      for (std::size_t f = 0; f < rotations && !placed && !skipped; ++f) {
        std::vector<SkipRecord> local_skips;
        auto made = generate_queries(sources, one, generator, templates, stratum.stratum_id,
                                     &local_skips, q / chunks.size() + f);
        if (made.empty()) {
          for (auto& s : local_skips) set.skips.push_back(std::move(s));
          skipped = true;
        } else if (seen_text.insert(made.front().text).second) {
          generated.push_back(std::move(made.front()));
          placed = true;
        }
      }
      if (!placed && !skipped) {
        set.skips.push_back({{chunks[c]->chunk_id}, std::string(query_type_name(effective)),
                             "every candidate duplicated an existing query"});
      }
    }
  }
  std::sort(generated.begin(), generated.end(), canonical_less);
  auto selection = select_queries(generated, corpus, embedder, config.relevancy_threshold);
  set.queries = std::move(selection.accepted);
  set.rejected = std::move(selection.rejected);
  return set;
}

}  // namespace ragval::testgen
