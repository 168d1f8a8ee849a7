/* Copyright 2026 The crnn-lab Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#pragma once

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "crnn/rng.hpp"

namespace crnn {

/// %.17g formatting: doubles round-trip exactly through text, which keeps
/// dataset and checkpoint files byte-stable under a fixed seed.
inline std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// ---- Associative retrieval task --------------------------------------------

/// Fixed token ids: 'a'-'z' -> 0-25, '0'-'9' -> 26-35, '?' -> 36.
struct Vocabulary {
  static constexpr long kSize = 37;
  static constexpr long kDigitBase = 26;
  static constexpr long kQuery = 36;

  static long id(char ch) {
    if (ch >= 'a' && ch <= 'z') return ch - 'a';
    if (ch >= '0' && ch <= '9') return kDigitBase + (ch - '0');
    if (ch == '?') return kQuery;
    throw std::invalid_argument(std::string("Vocabulary: unknown character '") + ch + "'");
  }

  static char ch(long id) {
    if (id >= 0 && id < 26) return static_cast<char>('a' + id);
    if (id >= kDigitBase && id < kDigitBase + 10)
      return static_cast<char>('0' + (id - kDigitBase));
    if (id == kQuery) return '?';
    throw std::invalid_argument("Vocabulary: unknown id " + std::to_string(id));
  }
};

/// One retrieval sample: K character-digit pairs, "??", then the query
/// character; the target is the digit class (0-9) paired with the query.
struct ArtSample {
  std::vector<long> tokens;  // length 2K+3
  long target = 0;
};

/// Builds a sample from its text form, e.g. "c9k8j3f1??k"; the target digit
/// is looked up from the pairs.
inline ArtSample make_art_sample(const std::string& text) {
  if (text.size() < 5 || text.size() % 2 == 0)
    throw std::invalid_argument("make_art_sample: malformed sequence '" + text + "'");
  ArtSample s;
  for (char ch : text) s.tokens.push_back(Vocabulary::id(ch));
  size_t n = text.size();
  long k = static_cast<long>((n - 3) / 2);
  char query = text[n - 1];
  long target = -1;
  for (long i = 0; i < k; ++i)
    if (text[static_cast<size_t>(2 * i)] == query)
      target = text[static_cast<size_t>(2 * i + 1)] - '0';
  if (target < 0)
    throw std::invalid_argument("make_art_sample: query not among pair characters");
  s.target = target;
  return s;
}

inline ArtSample gen_art_sample(Rng& rng, long k) {
  if (k < 1 || k > 26)
    throw std::invalid_argument("gen_art_sample: K must be in [1,26], got " + std::to_string(k));
  // partial Fisher-Yates over the 26 characters: distinct draws
  long alphabet[26];
  for (long i = 0; i < 26; ++i) alphabet[i] = i;
  ArtSample s;
  s.tokens.reserve(static_cast<size_t>(2 * k + 3));
  std::vector<long> digits(static_cast<size_t>(k));
  for (long i = 0; i < k; ++i) {
    long j = i + rng.uniform_int(26 - i);
    std::swap(alphabet[i], alphabet[j]);
    digits[static_cast<size_t>(i)] = rng.uniform_int(10);
    s.tokens.push_back(alphabet[i]);
    s.tokens.push_back(Vocabulary::kDigitBase + digits[static_cast<size_t>(i)]);
  }
  s.tokens.push_back(Vocabulary::kQuery);
  s.tokens.push_back(Vocabulary::kQuery);
  long q = rng.uniform_int(k);
  s.tokens.push_back(alphabet[q]);
  s.target = digits[static_cast<size_t>(q)];
  return s;
}

/// Seeded generation with per-sample substreams (counter-based), train and
/// validation on disjoint counter ranges.
inline std::pair<std::vector<ArtSample>, std::vector<ArtSample>> gen_art_dataset(
    long n_train, long n_valid, long k, uint64_t seed) {
  if (n_train < 1 || n_valid < 1)
    throw std::invalid_argument("gen_art_dataset: sizes must be >= 1");
  constexpr uint64_t kValidTag = 1ULL << 40;
  std::vector<ArtSample> train, valid;
  train.reserve(static_cast<size_t>(n_train));
  valid.reserve(static_cast<size_t>(n_valid));
  for (long i = 0; i < n_train; ++i) {
    Rng r = Rng::substream(seed, static_cast<uint64_t>(i));
    train.push_back(gen_art_sample(r, k));
  }
  for (long i = 0; i < n_valid; ++i) {
    Rng r = Rng::substream(seed, kValidTag + static_cast<uint64_t>(i));
    valid.push_back(gen_art_sample(r, k));
  }
  return {std::move(train), std::move(valid)};
}

// one sample per line: token ids then the target digit
inline void save_art(const std::string& path, const std::vector<ArtSample>& samples) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  for (const ArtSample& s : samples) {
    for (long t : s.tokens) out << t << ' ';
    out << s.target << '\n';
  }
}

inline std::vector<ArtSample> load_art(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open: " + path);
  std::vector<ArtSample> samples;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream is(line);
    std::vector<long> vals;
    long v;
    while (is >> v) vals.push_back(v);
    if (vals.size() < 6)
      throw std::runtime_error("malformed sample line in " + path);
    ArtSample s;
    s.target = vals.back();
    vals.pop_back();
    s.tokens = std::move(vals);
    for (long t : s.tokens)
      if (t < 0 || t >= Vocabulary::kSize)
        throw std::runtime_error("token id out of vocabulary range in " + path);
    if (s.target < 0 || s.target > 9)
      throw std::runtime_error("target out of range in " + path);
    samples.push_back(std::move(s));
  }
  return samples;
}

// ---- Linear cosine decay ----------------------------------------------------

struct LcdConfig {
  double alpha = 0.0;
  double beta = 0.001;
  long t_f = 25;  // total decay time, steps
  double period = 1.0;
  double x0 = 4.0;
};

/// x(t) = x0 [ (alpha + (t_f - t)/t_f) (1 + cos(2 T pi t / t_f)) / 2 + beta ]
inline double lcd_value(double t, const LcdConfig& cfg) {
  double tf = static_cast<double>(cfg.t_f);
  double linear = cfg.alpha + (tf - t) / tf;
  double cosine = (1.0 + std::cos(2.0 * cfg.period * M_PI * t / tf)) / 2.0;
  return cfg.x0 * (linear * cosine + cfg.beta);
}

struct LcdSequence {
  LcdConfig config;
  std::vector<double> values;  // x(0) .. x(t_f - 1), unscaled
};

inline LcdSequence gen_lcd_sequence(const LcdConfig& cfg) {
  if (cfg.t_f < 2) throw std::invalid_argument("LcdConfig: t_f must be >= 2");
  LcdSequence seq;
  seq.config = cfg;
  seq.values.reserve(static_cast<size_t>(cfg.t_f));
  for (long t = 0; t < cfg.t_f; ++t)
    seq.values.push_back(lcd_value(static_cast<double>(t), cfg));
  return seq;
}

inline std::vector<LcdSequence> gen_lcd_dataset(const std::vector<double>& periods,
                                                long n_per_period, long t_f, uint64_t seed) {
  if (periods.empty() || n_per_period < 1)
    throw std::invalid_argument("gen_lcd_dataset: empty periods or n_per_period < 1");
  std::vector<LcdSequence> out;
  out.reserve(periods.size() * static_cast<size_t>(n_per_period));
  for (size_t p = 0; p < periods.size(); ++p) {
    for (long i = 0; i < n_per_period; ++i) {
      Rng r = Rng::substream(seed, (static_cast<uint64_t>(p) << 32) + static_cast<uint64_t>(i));
      LcdConfig cfg;
      cfg.t_f = t_f;
      cfg.period = periods[p];
      cfg.x0 = r.uniform(2.0, 4.0);
      out.push_back(gen_lcd_sequence(cfg));
    }
  }
  return out;
}

// per record: a "period x0" header line, then one line of t_f values
inline void save_lcd(const std::string& path, const std::vector<LcdSequence>& seqs) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  for (const LcdSequence& s : seqs) {
    out << fmt_double(s.config.period) << ' ' << fmt_double(s.config.x0) << '\n';
    for (size_t i = 0; i < s.values.size(); ++i)
      out << (i ? " " : "") << fmt_double(s.values[i]);
    out << '\n';
  }
}

inline std::vector<LcdSequence> load_lcd(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open: " + path);
  std::vector<LcdSequence> seqs;
  std::string header, body;
  while (std::getline(in, header)) {
    if (header.empty()) continue;
    if (!std::getline(in, body))
      throw std::runtime_error("truncated record in " + path);
    LcdSequence s;
    {
      std::istringstream is(header);
      if (!(is >> s.config.period >> s.config.x0))
        throw std::runtime_error("malformed header line in " + path);
    }
    {
      std::istringstream is(body);
      double v;
      while (is >> v) s.values.push_back(v);
    }
    if (s.values.size() < 2) throw std::runtime_error("malformed values line in " + path);
    s.config.t_f = static_cast<long>(s.values.size());
    seqs.push_back(std::move(s));
  }
  return seqs;
}

// ---- scaling and delta targets ----------------------------------------------

/// Fixed analytic scaling into [0,1] (a subset of [-1,1]): x by the maximum
/// attainable value 4 (1 + beta), periods by 4.5.
struct Scaler {
  double x_divisor = 4.0 * 1.001;
  double period_divisor = 4.5;

  double scale_x(double x) const { return x / x_divisor; }
  double unscale_x(double x) const { return x * x_divisor; }
  double scale_period(double t) const { return t / period_divisor; }
  double unscale_period(double t) const { return t * period_divisor; }

  std::vector<double> scale_x(const std::vector<double>& xs) const {
    std::vector<double> out(xs.size());
    for (size_t i = 0; i < xs.size(); ++i) out[i] = scale_x(xs[i]);
    return out;
  }
};

/// delta[t] = values[t+1] - values[t]; cumulative sum plus values[0]
/// reconstructs the input.
inline std::vector<double> delta_targets(const std::vector<double>& values) {
  if (values.size() < 2)
    throw std::invalid_argument("delta_targets: need at least 2 values");
  std::vector<double> out(values.size() - 1);
  for (size_t t = 1; t < values.size(); ++t) out[t - 1] = values[t] - values[t - 1];
  return out;
}

}  // namespace crnn
