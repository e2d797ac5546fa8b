#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <vector>

#include "ascetic/predictor.hpp"
#include "ascetic/rng.hpp"

using namespace ascetic;

TEST_CASE("epsilon anneals linearly and clamps at the floor") {
  CHECK(epsilon_step({1.0, 0.05, 0.1}).eps == doctest::Approx(0.95).epsilon(1e-12));
  CHECK(epsilon_step({0.1, 0.05, 0.1}).eps == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(epsilon_step({0.12, 0.05, 0.1}).eps == doctest::Approx(0.1).epsilon(1e-12));
}

TEST_CASE("epsilon reaches the floor after exactly ceil((eps0-floor)/decrement) steps") {
  EpsilonSchedule s{1.0, 5e-4, 0.05};
  int needed = static_cast<int>(std::ceil((1.0 - 0.05) / 5e-4));
  double prev = s.eps;
  int steps = 0;
  while (s.eps > s.floor_value + 1e-15) {
    s = epsilon_step(s);
    CHECK(s.eps <= prev);  // non-increasing
    prev = s.eps;
    ++steps;
    REQUIRE(steps <= needed);
  }
  CHECK(steps == needed);
  CHECK(s.eps == doctest::Approx(0.05).epsilon(1e-12));
  CHECK(epsilon_step(s).eps == doctest::Approx(0.05).epsilon(1e-12));  // stays put
}

TEST_CASE("prediction reward counts correct guesses") {
  CHECK(prediction_reward({0, 1, 2}, {1, 2, 3}) == 2.0);
  CHECK(prediction_reward({0, 1, 2}, {}) == 0.0);
  CHECK(prediction_reward({4, 7, 9}, {9, 4, 7}) == 3.0);
  CHECK(prediction_reward({}, {1}) == 0.0);
  CHECK(prediction_reward({3}, {3, 3, 3}) == 1.0);  // arrivals form a set
}

TEST_CASE("the double-Q target pairs the online argmax with the target value") {
  // normalized reward 1, gamma 0.9, online argmax at index 1, target value 7
  CHECK(ddql_target(2.0, 2, 0.9, {1.0, 3.0}, {5.0, 7.0}) == doctest::Approx(7.3).epsilon(1e-12));
  CHECK(ddql_target(1.0, 1, 0.9, {1.0, 3.0}, {5.0, 7.0}) == doctest::Approx(7.3).epsilon(1e-12));
  // discount off: the target collapses to reward / z
  CHECK(ddql_target(3.0, 3, 0.0, {9.0, 0.0}, {100.0, 100.0}) == doctest::Approx(1.0));
  // online tie prefers the lower index
  CHECK(ddql_target(0.0, 1, 1.0, {5.0, 5.0}, {11.0, 13.0}) == doctest::Approx(11.0));
}

TEST_CASE("greedy prediction takes the top-z Q indices with lowest-id ties") {
  CHECK(greedy_prediction({0.9f, 0.1f, 0.8f, 0.3f}, 2) == ServiceSet{0, 2});
  CHECK(greedy_prediction({0.5f, 0.5f}, 1) == ServiceSet{0});
  CHECK(greedy_prediction({0.1f, 0.2f, 0.3f}, 3) == ServiceSet{0, 1, 2});
  CHECK_THROWS(greedy_prediction({0.1f, 0.2f}, 3));
}

TEST_CASE("the arrival window shifts FIFO and zero-pads until full") {
  ArrivalWindow w(6, 2);
  CHECK(w.filled() == 0);
  w.push({1});
  CHECK(w.filled() == 1);
  // rows: [zeros, {1}]
  CHECK_FALSE(w.bit(0, 1));
  CHECK(w.bit(1, 1));

  w.push({2, 4});
  w.push({0, 3});  // slot 1 falls out; rows: [{2,4}, {0,3}]
  CHECK(w.filled() == 2);
  CHECK(w.bit(0, 2));
  CHECK(w.bit(0, 4));
  CHECK_FALSE(w.bit(0, 1));
  CHECK(w.bit(1, 0));
  CHECK(w.bit(1, 3));

  std::vector<float> d = w.dense();
  REQUIRE(d.size() == 12u);
  for (int row = 0; row < 2; ++row)
    for (int sv = 0; sv < 6; ++sv)
      CHECK(d[row * 6 + sv] == (w.bit(row, sv) ? 1.0f : 0.0f));
}

TEST_CASE("an empty arrival slot appends an all-zero row") {
  ArrivalWindow w(4, 3);
  w.push({0, 1, 2, 3});
  w.push({});
  for (int sv = 0; sv < 4; ++sv) {
    CHECK(w.bit(1, sv));        // the populated row shifted up
    CHECK_FALSE(w.bit(2, sv));  // newest row is empty
  }
}

TEST_CASE("replay memory is a bounded ring that evicts the oldest entries") {
  ReplayMemory mem(3);
  CHECK(mem.capacity() == 3);
  CHECK(mem.size() == 0);
  auto make = [](double reward) {
    Transition t;
    t.reward = reward;
    return t;
  };
  mem.push(make(1));
  mem.push(make(2));
  CHECK(mem.size() == 2);
  mem.push(make(3));
  mem.push(make(4));  // overwrites reward-1, the oldest
  CHECK(mem.size() == 3);

  Rng rng(77);
  std::map<double, int> seen;
  for (int i = 0; i < 3000; ++i) seen[mem.sample(rng).reward]++;
  CHECK(seen.count(1) == 0);
  for (double r : {2.0, 3.0, 4.0}) {
    CHECK(seen[r] > 800);  // roughly uniform thirds
    CHECK(seen[r] < 1200);
  }
}

TEST_CASE("exploratory predictions are uniform over z-subsets (chi-square)") {
  // S=5, z=2 -> 10 subsets, 9 degrees of freedom, p=0.01 critical value 21.666
  Rng rng(424242);
  std::map<ServiceSet, long long> counts;
  const int kDraws = 100000;
  for (int i = 0; i < kDraws; ++i) counts[random_prediction(5, 2, rng)]++;
  REQUIRE(counts.size() == 10u);
  double expect = kDraws / 10.0;
  double chi2 = 0.0;
  for (const auto& [set, c] : counts) {
    CHECK(set.size() == 2u);
    CHECK(set[0] < set[1]);
    chi2 += (c - expect) * (c - expect) / expect;
  }
  CHECK(chi2 < 21.666);
}

TEST_CASE("a fresh or fully exploring agent emits valid random action sets") {
  AgentConfig cfg;
  cfg.n_services = 8;
  cfg.window = 4;
  cfg.top_z = 3;
  cfg.hidden = 8;
  cfg.eps0 = 1.0;
  cfg.eps_decrement = 0.0;  // stay exploring forever
  DdqlAgent agent(cfg, 99);
  for (int i = 0; i < 200; ++i) {
    agent.observe({i % 8});
    ServiceSet a = agent.act();
    REQUIRE(a.size() == 3u);
    CHECK(std::is_sorted(a.begin(), a.end()));
    CHECK(std::adjacent_find(a.begin(), a.end()) == a.end());
    CHECK(a.front() >= 0);
    CHECK(a.back() < 8);
  }
}

TEST_CASE("a greedy warm agent matches an independent top-z readout of its Q values") {
  AgentConfig cfg;
  cfg.n_services = 6;
  cfg.window = 3;
  cfg.top_z = 2;
  cfg.hidden = 8;
  cfg.eps0 = 0.0;  // greedy from the start
  DdqlAgent agent(cfg, 5);
  for (int i = 0; i < 10; ++i) {
    agent.observe({i % 6, (i + 2) % 6});
    ServiceSet a = agent.act();
    if (i + 1 >= cfg.window) {  // warm: prediction must be the Q argmax pair
      CHECK(a == greedy_prediction(agent.q_values(), 2));
    }
  }
}

TEST_CASE("same seed and observations replay into identical agents") {
  AgentConfig cfg;
  cfg.n_services = 6;
  cfg.window = 4;
  cfg.top_z = 2;
  cfg.hidden = 12;
  auto drive = [&](DdqlAgent& agent) {
    std::vector<ServiceSet> acts;
    for (int i = 0; i < 120; ++i) {
      agent.observe({i % 6, (i * i) % 6});
      agent.train_step();
      acts.push_back(agent.act());
    }
    return acts;
  };
  DdqlAgent a(cfg, 31), b(cfg, 31);
  CHECK(drive(a) == drive(b));
  CHECK(a.save() == b.save());
  DdqlAgent c(cfg, 32);
  CHECK(a.save() != c.save());
}

TEST_CASE("training on a constant trace drives the loss below 0.01 within 500 steps") {
  AgentConfig cfg;
  cfg.n_services = 6;
  cfg.window = 4;
  cfg.top_z = 2;
  cfg.hidden = 16;
  cfg.gamma = 0.0;  // supervised regression onto reward / z
  cfg.eps0 = 0.0;   // constant greedy action once warm
  DdqlAgent agent(cfg, 8);
  for (int i = 0; i < 40; ++i) {  // fill replay past one batch
    agent.observe({1, 4});
    agent.act();
  }
  REQUIRE(agent.memory_size() >= cfg.batch);
  double loss = 1e9;
  int step = 0;
  for (; step < 500 && loss >= 0.01; ++step) loss = agent.train_step();
  CHECK(loss < 0.01);
  INFO("converged after " << step << " steps");
  CHECK(std::isfinite(loss));
}

TEST_CASE("train_step is a no-op before one full batch accumulates") {
  AgentConfig cfg;
  cfg.n_services = 4;
  cfg.window = 2;
  cfg.top_z = 1;
  cfg.hidden = 8;
  DdqlAgent agent(cfg, 3);
  agent.observe({0});
  agent.act();
  agent.observe({1});
  CHECK(agent.train_step() == 0.0);
  CHECK(agent.train_steps() == 0);
}

TEST_CASE("agent checkpoints round-trip byte-identically") {
  AgentConfig cfg;
  cfg.n_services = 5;
  cfg.window = 3;
  cfg.top_z = 2;
  cfg.hidden = 8;
  DdqlAgent agent(cfg, 21);
  for (int i = 0; i < 80; ++i) {
    agent.observe({i % 5});
    agent.train_step();
    agent.act();
  }
  std::string text = agent.save();
  DdqlAgent back = DdqlAgent::load(text);
  CHECK(back.save() == text);
  CHECK(back.epsilon() == agent.epsilon());
  CHECK(back.train_steps() == agent.train_steps());
  CHECK(back.config().hidden == 8);

  CHECK_THROWS(DdqlAgent::load("ascetic-agent v2\n"));
  CHECK_THROWS(DdqlAgent::load("ascetic-agent v1\nbogus record\n"));
}

TEST_CASE("training throws rather than continuing from a non-finite loss") {
  AgentConfig cfg;
  cfg.n_services = 4;
  cfg.window = 2;
  cfg.top_z = 1;
  cfg.hidden = 4;
  DdqlAgent agent(cfg, 6);
  for (int i = 0; i < 40; ++i) {
    agent.observe({i % 4});
    agent.act();
  }
  // poison the checkpoint's online weights and reload
  std::string text = agent.save();
  std::string poisoned;
  for (std::size_t pos = 0; pos < text.size();) {
    std::size_t eol = text.find('\n', pos);
    std::string line = text.substr(pos, eol - pos);
    if (line.rfind("online ", 0) == 0) {
      poisoned += "online";
      int count = 0;
      for (char ch : line)
        if (ch == ' ') ++count;
      for (int i = 0; i < count; ++i) poisoned += " 3e38";
      poisoned += '\n';
    } else {
      poisoned += line + '\n';
    }
    pos = eol + 1;
  }
  DdqlAgent bad = DdqlAgent::load(poisoned);
  for (int i = 0; i < 40; ++i) {
    bad.observe({i % 4});
    bad.act();
  }
  CHECK_THROWS(bad.train_step());
}

TEST_CASE("frequency predictor ranks by count with lowest-id ties") {
  FrequencyPredictor fp(6);
  for (int i = 0; i < 5; ++i) fp.observe({3});
  CHECK(fp.predict(1) == ServiceSet{3});
  fp.observe({5});
  fp.observe({5});
  CHECK(fp.predict(2) == ServiceSet{3, 5});

  FrequencyPredictor uniform(6);
  CHECK(uniform.predict(3) == ServiceSet{0, 1, 2});  // all-zero counts tie
  CHECK_THROWS(uniform.predict(0));
  CHECK_THROWS(fp.observe({9}));
}

TEST_CASE("frequency beats uniform guessing on a biased i.i.d. trace") {
  Rng rng(1234);
  const int kS = 10, kZ = 3, kSlots = 10000;
  FrequencyPredictor fp(kS);
  double freq_reward = 0, rand_reward = 0;
  std::vector<ServiceId> arrived;
  for (int t = 0; t < kSlots; ++t) {
    arrived.clear();
    for (ServiceId s = 0; s < kS; ++s)  // biased arrival law: skewed toward low ids
      if (rng.uniform01() < 0.6 / (1 + s)) arrived.push_back(s);
    if (t > 0) {
      freq_reward += prediction_reward(fp.predict(kZ), arrived);
      rand_reward += prediction_reward(random_prediction(kS, kZ, rng), arrived);
    }
    fp.observe(arrived);
  }
  CHECK(freq_reward > rand_reward);
}

TEST_CASE("the agent learns a deterministic cyclic trace to better than 0.9 accuracy") {
  AgentConfig cfg;
  cfg.n_services = 6;
  cfg.window = 10;
  cfg.top_z = 1;
  cfg.hidden = 32;
  DdqlAgent agent(cfg, 12);
  // period-3 arrivals, period within the window
  auto arrivals = [](int t) { return std::vector<ServiceId>{t % 3}; };
  const int kSlots = 2300, kMeasureFrom = 2001;
  double hits = 0, counted = 0;
  ServiceSet pred;
  for (int t = 1; t <= kSlots; ++t) {
    agent.observe(arrivals(t));
    if (t >= kMeasureFrom && !pred.empty()) {
      hits += prediction_reward(pred, arrivals(t));
      counted += 1;
    }
    agent.train_step();
    pred = agent.act();
  }
  double accuracy = hits / counted;
  INFO("cyclic accuracy " << accuracy);
  CHECK(accuracy > 0.9);
}
