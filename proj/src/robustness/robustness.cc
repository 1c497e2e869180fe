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

#include "ragval/robustness/robustness.h"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <numeric>
#include <set>
#include <utility>

#include "ragval/common/error.h"
#include "ragval/common/hash.h"
#include "ragval/common/io.h"
#include "ragval/common/random.h"
#include "ragval/common/stats.h"
#include "ragval/common/text.h"

namespace ragval::robustness {

using nlohmann::json;

namespace {

bool is_letter(char c) { return std::isalpha(static_cast<unsigned char>(c)) != 0; }

bool is_word_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) != 0 || c == '\'';
}

void check_rate(double rate) {
  if (!(rate >= 0.0 && rate <= 1.0)) throw InvalidArgument("perturbation rate must lie in [0, 1]");
}

std::string edit_word(std::string w, Rng& rng) {
  std::vector<std::size_t> swappable;
  for (std::size_t i = 0; i + 1 < w.size(); ++i) {
    if (w[i] != w[i + 1]) swappable.push_back(i);
  }
  std::size_t op = rng.index(3);
  if (op == 0 && swappable.empty()) op = 1;
  switch (op) {
    case 0: {
      const std::size_t i = swappable[rng.index(swappable.size())];
      std::swap(w[i], w[i + 1]);
      break;
    }
    case 1:
      w.erase(rng.index(w.size()), 1);
      break;
    default: {
      const std::size_t i = rng.index(w.size());
      w.insert(w.begin() + static_cast<std::ptrdiff_t>(i), w[i]);
      break;
    }
  }
  return w;
}

struct Colloquialism {
  std::string_view formal;
  std::string_view informal;
};

constexpr std::array<Colloquialism, 16> kColloquialisms = {{
    {"do not", "don't"},
    {"does not", "doesn't"},
    {"cannot", "can't"},
    {"what is", "what's"},
    {"how do i", "how do u"},
    {"your", "ur"},
    {"you", "u"},
    {"please", "pls"},
    {"because", "cuz"},
    {"going to", "gonna"},
    {"want to", "wanna"},
    {"information", "info"},
    {"is it true that", "so is it true"},
    {"what can be inferred from", "what do we get from"},
    {"the following", "this"},
    {"documents", "docs"},
}};

bool ieq_at(std::string_view text, std::size_t pos, std::string_view word) {
  if (pos + word.size() > text.size()) return false;
  for (std::size_t i = 0; i < word.size(); ++i) {
    if (std::tolower(static_cast<unsigned char>(text[pos + i])) != word[i]) return false;
  }
  const std::size_t end = pos + word.size();
  return (pos == 0 || !is_word_char(text[pos - 1])) &&
         (end == text.size() || !is_word_char(text[end]));
}

bool higher_is_better(const std::string& metric) { return metric != metrics::kCompletenessW; }

std::uint64_t seed_for(std::uint64_t seed, const std::string& query_id, PerturbationKind kind) {
  return mix64(seed ^ fnv1a64(query_id + "/" + std::string(perturbation_kind_name(kind))));
}

std::map<std::string, double> values_of(const std::map<std::string, metrics::MetricScore>& m) {
  std::map<std::string, double> out;
  for (const auto& [k, v] : m) out[k] = v.value;
  return out;
}

}  // namespace

std::string_view perturbation_kind_name(PerturbationKind kind) {
  switch (kind) {
    case PerturbationKind::kAdversarialDistractor:
      return "adversarial_distractor";
    case PerturbationKind::kOodQuery:
      return "ood_query";
    case PerturbationKind::kTypo:
      return "typo";
    case PerturbationKind::kColloquial:
      return "colloquial";
  }
  return "?";
}

PerturbationKind parse_perturbation_kind(std::string_view name) {
  for (auto k : {PerturbationKind::kAdversarialDistractor, PerturbationKind::kOodQuery,
                 PerturbationKind::kTypo, PerturbationKind::kColloquial}) {
    if (perturbation_kind_name(k) == name) return k;
  }
  throw InvalidArgument("unknown perturbation kind \"" + std::string(name) + "\"");
}

json Perturbation::to_json() const {
  json j = {{"kind", perturbation_kind_name(kind)}, {"seed", seed}};
  if (kind == PerturbationKind::kTypo || kind == PerturbationKind::kColloquial) j["rate"] = rate;
  if (kind == PerturbationKind::kAdversarialDistractor) {
    j["distractor_chunk_id"] = distractor_chunk_id;
    j["position"] = position;
  }
  return j;
}

std::string perturb_typos(std::string_view text, double rate, std::uint64_t seed,
                          std::size_t* edited) {
  check_rate(rate);
  Rng rng(seed);
  std::string out;
  out.reserve(text.size() + 8);
  std::size_t edits = 0;
  for (std::size_t i = 0; i < text.size();) {
    if (!is_letter(text[i])) {
      out.push_back(text[i++]);
      continue;
    }
    std::size_t j = i;
    while (j < text.size() && is_letter(text[j])) ++j;
    std::string word(text.substr(i, j - i));
    if (word.size() >= 3 && rng.bernoulli(rate)) {
      word = edit_word(std::move(word), rng);
      ++edits;
    }
    out += word;
    i = j;
  }
  if (edited) *edited = edits;
  return out;
}

std::string perturb_colloquial(std::string_view text, double rate, std::uint64_t seed) {
  check_rate(rate);
  Rng rng(seed);
  std::string cur(text);
  for (const auto& c : kColloquialisms) {
    std::string next;
    for (std::size_t i = 0; i < cur.size();) {
      if (ieq_at(cur, i, c.formal) && rng.bernoulli(rate)) {
        std::string rep(c.informal);
        if (std::isupper(static_cast<unsigned char>(cur[i]))) {
          rep[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(rep[0])));
        }
        next += rep;
        i += c.formal.size();
      } else {
        next.push_back(cur[i++]);
      }
    }
    cur = std::move(next);
  }
  if (!cur.empty() && std::isupper(static_cast<unsigned char>(cur[0])) && rng.bernoulli(rate)) {
    cur[0] = static_cast<char>(std::tolower(static_cast<unsigned char>(cur[0])));
  }
  if (!cur.empty() && cur.back() == '?' && rng.bernoulli(rate)) cur.pop_back();
  return cur;
}

InjectedContext inject_distractor(const std::vector<std::string>& context,
                                  const std::string& context_stratum,
                                  const corpus::Chunk& distractor,
                                  const std::string& distractor_stratum, std::size_t position) {
  InjectedContext out;
  std::vector<std::string> extra;
  for (const auto& s : distractor.sentences) {
    const auto t = text::trim(s.text);
    if (!t.empty()) extra.emplace_back(t);
  }
  if (!extra.empty() && distractor_stratum == context_stratum) {
    throw InvalidArgument("distractor " + distractor.chunk_id + " comes from the context's own "
                          "stratum " + context_stratum);
  }
  position = std::min(position, context.size());
  for (std::size_t i = 0; i <= context.size(); ++i) {
    if (i == position) {
      for (auto& s : extra) {
        out.sentences.push_back(s);
        out.provenance.push_back(distractor.chunk_id);
      }
    }
    if (i < context.size()) {
      out.sentences.push_back(context[i]);
      out.provenance.emplace_back();
    }
  }
  return out;
}

std::vector<providers::EmbeddingVector> stratum_embedding_centroids(
    const std::vector<topics::Stratum>& strata, const corpus::Corpus& corpus,
    const std::vector<providers::EmbeddingVector>& chunk_vectors) {
  if (chunk_vectors.size() != corpus.chunks().size()) {
    throw InvalidArgument("centroids: one vector per chunk required");
  }
  std::map<std::string, std::size_t> row;
  for (std::size_t i = 0; i < corpus.chunks().size(); ++i) row[corpus.chunks()[i].chunk_id] = i;
  std::vector<providers::EmbeddingVector> out;
  for (const auto& s : strata) {
    if (s.is_noise || s.chunk_ids.empty()) continue;
    providers::EmbeddingVector c;
    c.model_id = chunk_vectors.front().model_id;
    c.values.assign(chunk_vectors.front().values.size(), 0.0);
    for (const auto& id : s.chunk_ids) {
      const auto it = row.find(id);
      if (it == row.end()) throw InvalidArgument("centroids: unknown chunk " + id);
      const auto& v = chunk_vectors[it->second].values;
      for (std::size_t d = 0; d < v.size(); ++d) c.values[d] += v[d];
    }
    for (double& x : c.values) x /= static_cast<double>(s.chunk_ids.size());
    out.push_back(std::move(c));
  }
  return out;
}

std::vector<std::string> parse_ood_pool(std::string_view t) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos <= t.size()) {
    std::size_t nl = t.find('\n', pos);
    if (nl == std::string_view::npos) nl = t.size();
    const auto line = text::trim(t.substr(pos, nl - pos));
    pos = nl + 1;
    if (!line.empty() && line.front() != '#') out.emplace_back(line);
  }
  return out;
}

std::vector<OodQuery> gen_ood_queries(const std::vector<std::string>& pool, std::size_t count,
                                      std::uint64_t seed,
                                      const std::vector<providers::EmbeddingVector>& centroids,
                                      providers::Embedder& embedder, double ceiling) {
  std::vector<OodQuery> out;
  if (count == 0) return out;
  if (pool.empty()) throw InvalidArgument("OOD pool is empty");
  if (centroids.empty()) throw InvalidArgument("OOD check needs at least one stratum centroid");
  std::vector<std::size_t> order(pool.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  rng.shuffle(order);
  std::set<std::string> seen;
  for (std::size_t idx : order) {
    if (out.size() == count) break;
    const std::string& text = pool[idx];
    if (!seen.insert(text).second) continue;
    auto sentences = metrics::split_sentences(text);
    if (sentences.empty()) continue;
    const auto qs = metrics::make_sentence_set(metrics::Role::kQuery, sentences, embedder);
    double worst = -1.0;
    for (const auto& c : centroids) {
      metrics::SentenceSet cs;
      cs.role = metrics::Role::kContext;
      cs.embeddings = {c};
      worst = std::max(
          worst, metrics::context_relevancy(qs, cs, metrics::Aggregation::kMean).value);
    }
    if (worst >= ceiling) continue;
    OodQuery q;
    q.query.text = text;
    q.query.query_type = testgen::QueryType::kSimpleFactual;
    q.query.stratum_id = "ood";
    q.query.ood = true;
    q.query.query_id = "ood" + sha256_hex(text).substr(0, 12);
    q.max_relevancy = worst;
    out.push_back(std::move(q));
  }
  if (out.size() < count) {
    throw InvalidArgument("OOD pool exhausted: found " + std::to_string(out.size()) + " of " +
                          std::to_string(count) + " queries below the ceiling " +
                          io::format_double(ceiling));
  }
  return out;
}

json RobustnessReport::to_json() const {
  json kinds = json::array();
  for (auto k : config.kinds) kinds.push_back(perturbation_kind_name(k));
  json header = {{"kinds", kinds},
                 {"typo_rate", config.typo_rate},
                 {"colloquial_rate", config.colloquial_rate},
                 {"distractor_position", config.distractor_position},
                 {"worst_k", config.worst_k},
                 {"seed", config.seed},
                 {"ood_ceiling", config.ood_ceiling},
                 {"delta", "perturbed - clean"}};
  json pm = json::object();
  for (const auto& [metric, by_kind] : per_metric) {
    for (const auto& [kind, s] : by_kind) {
      json worst = json::array();
      for (const auto& [id, d] : s.worst) worst.push_back({{"query_id", id}, {"delta", d}});
      pm[metric][kind] = {{"n", s.n},
                          {"mean_delta", s.mean_delta},
                          {"p5", s.p5},
                          {"p95", s.p95},
                          {"worst", std::move(worst)}};
    }
  }
  json recs = json::array();
  for (const auto& r : records) {
    recs.push_back({{"query_id", r.query_id},
                    {"perturbation", r.perturbation.to_json()},
                    {"perturbed_query", r.perturbed_query},
                    {"clean", r.clean},
                    {"perturbed", r.perturbed},
                    {"delta", r.delta}});
  }
  json fails = json::array();
  for (const auto& f : failures) {
    fails.push_back({{"query_id", f.query_id}, {"kind", f.kind}, {"error", f.error}});
  }
  json ood = json::array();
  for (const auto& o : ood_review) {
    ood.push_back({{"query_id", o.query_id},
                   {"query", o.query},
                   {"answer", o.answer},
                   {"c_relevancy", o.c_relevancy},
                   {"status", "needs human review"}});
  }
  return {{"header", std::move(header)},
          {"per_metric", std::move(pm)},
          {"records", std::move(recs)},
          {"failures", std::move(fails)},
          {"ood_review", std::move(ood)}};
}

std::string RobustnessReport::to_csv() const {
  std::string out = "query_id,kind,metric,clean,perturbed,delta\n";
  for (const auto& r : records) {
    for (const auto& [metric, d] : r.delta) {
      out += r.query_id + "," + std::string(perturbation_kind_name(r.kind)) + "," + metric + "," +
             io::format_double(r.clean.at(metric)) + "," +
             io::format_double(r.perturbed.at(metric)) + "," + io::format_double(d) + "\n";
    }
  }
  return out;
}

RobustnessReport run_robustness_suite(const std::vector<testgen::TestQuery>& queries,
                                      RagRunner& runner, const SuiteConfig& config,
                                      providers::Embedder& embedder, providers::NliProvider& nli,
                                      const std::vector<DistractorSource>& distractors,
                                      const std::vector<testgen::TestQuery>& ood_queries) {
  check_rate(config.typo_rate);
  check_rate(config.colloquial_rate);
  RobustnessReport report;
  report.config = config;

  std::vector<const testgen::TestQuery*> ordered;
  for (const auto& q : queries) ordered.push_back(&q);
  std::stable_sort(ordered.begin(), ordered.end(),
                   [](const auto* a, const auto* b) { return a->query_id < b->query_id; });

  std::vector<PerturbationKind> kinds;
  for (auto k : config.kinds) {
    if (k != PerturbationKind::kOodQuery) kinds.push_back(k);
  }
  std::sort(kinds.begin(), kinds.end(), [](auto a, auto b) {
    return perturbation_kind_name(a) < perturbation_kind_name(b);
  });

  for (const auto* q : ordered) {
    RagResponse clean;
    std::map<std::string, double> clean_scores;
    try {
      clean = runner.run({q->text, std::nullopt});
      clean_scores = values_of(
          metrics::score_functional(q->text, clean.retrieved_context, clean.answer, embedder, nli,
                                    config.eval));
    } catch (const std::exception& e) {
      report.failures.push_back({q->query_id, "clean", e.what()});
      continue;
    }
    for (auto kind : kinds) {
      DeltaRecord rec;
      rec.query_id = q->query_id;
      rec.kind = kind;
      rec.perturbation.kind = kind;
      rec.perturbation.seed = seed_for(config.seed, q->query_id, kind);
      rec.perturbed_query = q->text;
      std::optional<std::vector<std::string>> context;
      std::vector<std::string> scored_context;
      try {
        if (kind == PerturbationKind::kTypo) {
          rec.perturbation.rate = config.typo_rate;
          rec.perturbed_query = perturb_typos(q->text, config.typo_rate, rec.perturbation.seed);
        } else if (kind == PerturbationKind::kColloquial) {
          rec.perturbation.rate = config.colloquial_rate;
          rec.perturbed_query =
              perturb_colloquial(q->text, config.colloquial_rate, rec.perturbation.seed);
        } else {
          std::vector<const DistractorSource*> pool;
          for (const auto& d : distractors) {
            if (d.chunk && d.stratum_id != q->stratum_id) pool.push_back(&d);
          }
          if (pool.empty()) throw InvalidArgument("no distractor from another stratum");
          Rng rng(rec.perturbation.seed);
          const auto* pick = pool[rng.index(pool.size())];
          std::vector<std::string> sentences;
          for (const auto& piece : clean.retrieved_context) {
            for (auto& s : metrics::split_sentences(piece)) sentences.push_back(std::move(s));
          }
          auto injected = inject_distractor(sentences, q->stratum_id, *pick->chunk,
                                            pick->stratum_id, config.distractor_position);
          rec.perturbation.distractor_chunk_id = pick->chunk->chunk_id;
          rec.perturbation.position = config.distractor_position;
          context = std::move(injected.sentences);
        }
        if (rec.perturbed_query == q->text && !context) {
          rec.perturbed = clean_scores;  // identity: nothing to rerun
        } else {
          const RagResponse r = runner.run({rec.perturbed_query, context});
          rec.perturbed = values_of(metrics::score_functional(
              rec.perturbed_query, r.retrieved_context, r.answer, embedder, nli, config.eval));
        }
      } catch (const std::exception& e) {
        report.failures.push_back(
            {q->query_id, std::string(perturbation_kind_name(kind)), e.what()});
        continue;
      }
      rec.clean = clean_scores;
      for (const auto& [metric, v] : rec.perturbed) rec.delta[metric] = v - clean_scores.at(metric);
      report.records.push_back(std::move(rec));
    }
  }

  for (const auto& metric : metrics::functional_metric_names()) {
    for (auto kind : kinds) {
      const std::string kname(perturbation_kind_name(kind));
      std::vector<std::pair<std::string, double>> deltas;
      for (const auto& r : report.records) {
        if (r.kind == kind) deltas.emplace_back(r.query_id, r.delta.at(metric));
      }
      if (deltas.empty()) continue;
      DeltaSummary s;
      s.n = deltas.size();
      std::vector<double> values;
      for (const auto& d : deltas) values.push_back(d.second);
      s.mean_delta = stats::mean(values);
      s.p5 = stats::quantile(values, 0.05);
      s.p95 = stats::quantile(values, 0.95);
      const bool up = higher_is_better(metric);
      std::stable_sort(deltas.begin(), deltas.end(), [up](const auto& a, const auto& b) {
        if (a.second != b.second) return up ? a.second < b.second : a.second > b.second;
        return a.first < b.first;
      });
      deltas.resize(std::min(deltas.size(), config.worst_k));
      s.worst = std::move(deltas);
      report.per_metric[metric][kname] = std::move(s);
    }
  }

  std::vector<const testgen::TestQuery*> ood_sorted;
  for (const auto& q : ood_queries) ood_sorted.push_back(&q);
  std::stable_sort(ood_sorted.begin(), ood_sorted.end(),
                   [](const auto* a, const auto* b) { return a->query_id < b->query_id; });
  for (const auto* q : ood_sorted) {
    try {
      const RagResponse r = runner.run({q->text, std::nullopt});
      OodReview o{q->query_id, q->text, r.answer, 0.0};
      const auto qs = metrics::make_sentence_set(metrics::Role::kQuery,
                                                 metrics::split_sentences(q->text), embedder);
      std::vector<std::string> ctx;
      for (const auto& piece : r.retrieved_context) {
        for (auto& s : metrics::split_sentences(piece)) ctx.push_back(std::move(s));
      }
      if (!ctx.empty()) {
        const auto cs = metrics::make_sentence_set(metrics::Role::kContext, ctx, embedder);
        o.c_relevancy = metrics::context_relevancy(qs, cs, metrics::Aggregation::kMean).value;
      }
      report.ood_review.push_back(std::move(o));
    } catch (const std::exception& e) {
      report.failures.push_back({q->query_id, "ood_query", e.what()});
    }
  }
  return report;
}

}  // namespace ragval::robustness
