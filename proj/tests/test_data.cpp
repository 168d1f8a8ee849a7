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

#include <catch2/catch_amalgamated.hpp>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>

#include "crnn/data.hpp"

using namespace crnn;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

}  // namespace

TEST_CASE("vocabulary mapping") {
  CHECK(Vocabulary::id('a') == 0);
  CHECK(Vocabulary::id('z') == 25);
  CHECK(Vocabulary::id('0') == 26);
  CHECK(Vocabulary::id('9') == 35);
  CHECK(Vocabulary::id('?') == 36);
  for (long i = 0; i < 37; ++i) CHECK(Vocabulary::id(Vocabulary::ch(i)) == i);
  CHECK_THROWS(Vocabulary::id('A'));
  CHECK_THROWS(Vocabulary::ch(37));
}

TEST_CASE("retrieval sample parsed from text") {
  ArtSample s = make_art_sample("c9k8j3f1??k");
  REQUIRE(s.tokens.size() == 11);
  CHECK(s.tokens[0] == Vocabulary::id('c'));
  CHECK(s.tokens[1] == Vocabulary::id('9'));
  CHECK(s.tokens[8] == Vocabulary::kQuery);
  CHECK(s.tokens[9] == Vocabulary::kQuery);
  CHECK(s.tokens[10] == Vocabulary::id('k'));
  CHECK(s.target == 8);
  CHECK_THROWS(make_art_sample("c9k8??z"));  // query not among pairs
  CHECK_THROWS(make_art_sample("c9??"));     // even length
}

TEST_CASE("retrieval generator properties") {
  SECTION("same seed reproduces the sample exactly") {
    Rng a(123), b(123);
    for (int i = 0; i < 20; ++i) {
      ArtSample sa = gen_art_sample(a, 4);
      ArtSample sb = gen_art_sample(b, 4);
      CHECK(sa.tokens == sb.tokens);
      CHECK(sa.target == sb.target);
    }
  }
  SECTION("structure holds over many draws and digit marginal is uniform") {
    Rng rng(7);
    const long n = 100000;
    const long k = 4;
    std::vector<long> digit_count(10, 0);
    for (long i = 0; i < n; ++i) {
      ArtSample s = gen_art_sample(rng, k);
      REQUIRE(s.tokens.size() == static_cast<size_t>(2 * k + 3));
      std::set<long> chars;
      long target_from_pairs = -1;
      long query = s.tokens[static_cast<size_t>(2 * k + 2)];
      for (long p = 0; p < k; ++p) {
        long ch = s.tokens[static_cast<size_t>(2 * p)];
        long dg = s.tokens[static_cast<size_t>(2 * p + 1)];
        REQUIRE(ch >= 0);
        REQUIRE(ch < 26);
        REQUIRE(dg >= Vocabulary::kDigitBase);
        REQUIRE(dg < Vocabulary::kDigitBase + 10);
        chars.insert(ch);
        if (ch == query) target_from_pairs = dg - Vocabulary::kDigitBase;
      }
      REQUIRE(chars.size() == static_cast<size_t>(k));  // no repeated characters
      REQUIRE(s.tokens[static_cast<size_t>(2 * k)] == Vocabulary::kQuery);
      REQUIRE(s.tokens[static_cast<size_t>(2 * k + 1)] == Vocabulary::kQuery);
      REQUIRE(chars.count(query) == 1);
      REQUIRE(s.target == target_from_pairs);
      digit_count[static_cast<size_t>(s.target)]++;
    }
    // each digit should appear n/10 +- 3 sigma of a binomial(n, 1/10)
    double expect = n / 10.0;
    double sigma = std::sqrt(n * 0.1 * 0.9);
    for (long d = 0; d < 10; ++d)
      CHECK(std::abs(digit_count[static_cast<size_t>(d)] - expect) < 3.0 * sigma);
  }
}

TEST_CASE("retrieval dataset generation and serialization") {
  auto [train, valid] = gen_art_dataset(500, 100, 4, 2024);
  CHECK(train.size() == 500);
  CHECK(valid.size() == 100);

  SECTION("regeneration is identical, different seed differs") {
    auto [t2, v2] = gen_art_dataset(500, 100, 4, 2024);
    CHECK(t2[17].tokens == train[17].tokens);
    CHECK(v2[99].tokens == valid[99].tokens);
    auto [t3, v3] = gen_art_dataset(500, 100, 4, 2025);
    bool any_diff = false;
    for (size_t i = 0; i < t3.size() && !any_diff; ++i)
      any_diff = t3[i].tokens != train[i].tokens;
    CHECK(any_diff);
  }
  SECTION("train/valid substreams do not collide across 100 seeds") {
    for (uint64_t s = 0; s < 100; ++s) {
      auto [t, v] = gen_art_dataset(3, 3, 4, s);
      for (const auto& a : t)
        for (const auto& b : v) CHECK(a.tokens != b.tokens);
    }
  }
  SECTION("save/load round trip is byte identical") {
    std::string p1 = "art_rt1.txt", p2 = "art_rt2.txt";
    save_art(p1, train);
    std::vector<ArtSample> loaded = load_art(p1);
    REQUIRE(loaded.size() == train.size());
    for (size_t i = 0; i < loaded.size(); ++i) {
      CHECK(loaded[i].tokens == train[i].tokens);
      CHECK(loaded[i].target == train[i].target);
    }
    save_art(p2, loaded);
    CHECK(read_file(p1) == read_file(p2));
    std::remove(p1.c_str());
    std::remove(p2.c_str());
  }
}

TEST_CASE("cosine decay closed form") {
  LcdConfig cfg;
  cfg.x0 = 3.0;
  cfg.period = 2.0;
  SECTION("t = 0 gives x0 (1 + beta)") {
    CHECK(lcd_value(0.0, cfg) == Catch::Approx(3.0 * 1.001).margin(1e-12));
  }
  SECTION("t = t_f gives x0 beta") {
    CHECK(lcd_value(25.0, cfg) == Catch::Approx(3.0 * 0.001).margin(1e-12));
  }
  SECTION("cosine zero crossings kill the linear term") {
    // 2 T pi t / t_f = pi at t = t_f / (2T) = 6.25
    CHECK(lcd_value(6.25, cfg) == Catch::Approx(3.0 * 0.001).margin(1e-12));
  }
  SECTION("interior point against a hand-evaluated expression") {
    double t = 10.0;
    double expect = 3.0 * ((15.0 / 25.0) * (1.0 + std::cos(2.0 * 2.0 * M_PI * 10.0 / 25.0)) / 2.0 + 0.001);
    CHECK(lcd_value(t, cfg) == Catch::Approx(expect).margin(1e-12));
  }
}

TEST_CASE("cosine decay dataset") {
  std::vector<double> periods_train{0.5, 1.5, 2.5, 3.5, 4.5};
  std::vector<double> periods_valid{1.0, 2.0, 3.0, 4.0};
  auto train = gen_lcd_dataset(periods_train, 1000, 25, 11);
  auto valid = gen_lcd_dataset(periods_valid, 500, 25, 12);
  CHECK(train.size() == 5000);
  CHECK(valid.size() == 2000);

  SECTION("every sequence matches the closed form and x0 is in [2,4]") {
    for (size_t i = 0; i < train.size(); i += 97) {
      const LcdSequence& s = train[i];
      REQUIRE(s.values.size() == 25);
      CHECK(s.config.x0 >= 2.0);
      CHECK(s.config.x0 <= 4.0);
      for (long t = 0; t < 25; ++t)
        CHECK(s.values[static_cast<size_t>(t)] ==
              Catch::Approx(lcd_value(static_cast<double>(t), s.config)).margin(1e-12));
    }
  }
  SECTION("regeneration is identical") {
    auto again = gen_lcd_dataset(periods_train, 1000, 25, 11);
    CHECK(again[4321].values == train[4321].values);
    CHECK(again[4321].config.x0 == train[4321].config.x0);
  }
  SECTION("save/load round trip is byte identical") {
    std::string p1 = "lcd_rt1.txt", p2 = "lcd_rt2.txt";
    save_lcd(p1, valid);
    auto loaded = load_lcd(p1);
    REQUIRE(loaded.size() == valid.size());
    CHECK(loaded[123].values == valid[123].values);
    CHECK(loaded[123].config.period == valid[123].config.period);
    CHECK(loaded[123].config.x0 == valid[123].config.x0);
    save_lcd(p2, loaded);
    CHECK(read_file(p1) == read_file(p2));
    std::remove(p1.c_str());
    std::remove(p2.c_str());
  }
}

TEST_CASE("scaling and delta targets") {
  Scaler sc;
  SECTION("scale round trip") {
    for (double x : {0.0, 0.001, 2.7, 4.004}) {
      CHECK(sc.unscale_x(sc.scale_x(x)) == Catch::Approx(x).margin(1e-12));
      CHECK(sc.scale_x(x) <= 1.0 + 1e-12);
    }
    CHECK(sc.unscale_period(sc.scale_period(4.5)) == Catch::Approx(4.5).margin(1e-12));
    CHECK(sc.scale_period(4.5) == Catch::Approx(1.0).margin(1e-12));
  }
  SECTION("deltas reconstruct the sequence") {
    std::vector<double> xs{4.0, 3.1, 2.5, 0.7, 1.2};
    std::vector<double> d = delta_targets(xs);
    REQUIRE(d.size() == 4);
    CHECK(d[0] == Catch::Approx(-0.9).margin(1e-12));
    double acc = xs[0];
    for (size_t t = 0; t < d.size(); ++t) {
      acc += d[t];
      CHECK(acc == Catch::Approx(xs[t + 1]).margin(1e-12));
    }
    CHECK_THROWS(delta_targets({1.0}));
  }
}
