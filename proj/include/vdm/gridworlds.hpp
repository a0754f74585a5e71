#pragma once

#include <set>
#include <vector>

#include "vdm/env.hpp"

namespace vdm {

// Actions shared by the grid environments.
enum GridAction { kUp = 0, kDown = 1, kLeft = 2, kRight = 3 };

namespace detail {
inline std::pair<int, int> moved(int r, int c, int action) {
  switch (action) {
    case kUp: return {r - 1, c};
    case kDown: return {r + 1, c};
    case kLeft: return {r, c - 1};
    case kRight: return {r, c + 1};
  }
  return {r, c};
}
}  // namespace detail

// 7x7 deterministic maze with two corridors. The centre block is walled, so
// the goal at top-centre is reachable from the bottom-centre start only along
// the left or the right edge. Evaluation reward 1 on reaching the goal.
class TwoRoadsEnv : public Env {
 public:
  static constexpr int kSize = 7;
  static constexpr int kMaxSteps = 100;

  explicit TwoRoadsEnv(std::uint64_t /*seed*/ = 0) {
    spec_ = ActionSpec{ActionSpec::Kind::Discrete, 4};
  }

  const ActionSpec& action_spec() const override { return spec_; }
  int obs_dim() const override { return 2 * kSize; }
  int state_key() const override { return row_ * kSize + col_; }
  int state_key_count() const override { return kSize * kSize; }

  static bool wall(int r, int c) {
    return r >= 1 && r <= kSize - 2 && c >= 1 && c <= kSize - 2;
  }

  static constexpr int start_row = kSize - 1, start_col = kSize / 2;
  static constexpr int goal_row = 0, goal_col = kSize / 2;

  EnvObservation reset() override {
    row_ = start_row;
    col_ = start_col;
    t_ = 0;
    done_ = false;
    return make_obs(false, 0.0);
  }

  EnvObservation step(int action) override {
    check_step_allowed(done_, action);
    auto [nr, nc] = detail::moved(row_, col_, action);
    if (nr >= 0 && nr < kSize && nc >= 0 && nc < kSize && !wall(nr, nc)) {
      row_ = nr;
      col_ = nc;
    }
    t_ += 1;
    bool at_goal = row_ == goal_row && col_ == goal_col;
    done_ = at_goal || t_ >= kMaxSteps;
    return make_obs(done_, at_goal ? 1.0 : 0.0);
  }

  int row() const { return row_; }
  int col() const { return col_; }

 private:
  EnvObservation make_obs(bool done, double reward) const {
    EnvObservation obs;
    obs.state = one_hot(row_, kSize);
    Vec c = one_hot(col_, kSize);
    obs.state.insert(obs.state.end(), c.begin(), c.end());
    obs.episode_done = done;
    obs.extrinsic_reward = reward;
    return obs;
  }

  ActionSpec spec_;
  int row_ = start_row, col_ = start_col;
  int t_ = 0;
  bool done_ = false;
};

// 21x21 grid with slippery moves (intended direction with probability 0.8,
// otherwise uniform over the other three) and a 5x5 stochastic region: any
// move that lands inside the region instead teleports the agent uniformly
// within it. Evaluation reward 1 the first time each cell is visited in an
// episode.
class StochGridEnv : public Env {
 public:
  static constexpr int kSize = 21;
  static constexpr int kMaxSteps = 200;
  static constexpr double kMoveProb = 0.8;

  explicit StochGridEnv(std::uint64_t seed) : rng_(seed) {
    spec_ = ActionSpec{ActionSpec::Kind::Discrete, 4};
  }

  const ActionSpec& action_spec() const override { return spec_; }
  int obs_dim() const override { return 2 * kSize; }
  int state_key() const override { return row_ * kSize + col_; }
  int state_key_count() const override { return kSize * kSize; }

  static constexpr int region_lo = 8, region_hi = 12;  // inclusive 5x5 block
  static bool in_region(int r, int c) {
    return r >= region_lo && r <= region_hi && c >= region_lo && c <= region_hi;
  }

  EnvObservation reset() override {
    row_ = 0;
    col_ = 0;
    t_ = 0;
    done_ = false;
    visited_.assign(kSize * kSize, 0);
    visited_[static_cast<std::size_t>(state_key())] = 1;
    return make_obs(false, 0.0);
  }

  EnvObservation step(int action) override {
    check_step_allowed(done_, action);
    int dir = action;
    if (rng_.uniform() >= kMoveProb) {
      int other = rng_.uniform_int(3);
      dir = other >= action ? other + 1 : other;
    }
    auto [nr, nc] = detail::moved(row_, col_, dir);
    if (nr >= 0 && nr < kSize && nc >= 0 && nc < kSize) {
      row_ = nr;
      col_ = nc;
    }
    if (in_region(row_, col_)) {
      row_ = region_lo + rng_.uniform_int(region_hi - region_lo + 1);
      col_ = region_lo + rng_.uniform_int(region_hi - region_lo + 1);
    }
    t_ += 1;
    done_ = t_ >= kMaxSteps;
    double reward = 0.0;
    std::size_t key = static_cast<std::size_t>(state_key());
    if (!visited_[key]) {
      visited_[key] = 1;
      reward = 1.0;
    }
    return make_obs(done_, reward);
  }

  int row() const { return row_; }
  int col() const { return col_; }

 private:
  EnvObservation make_obs(bool done, double reward) const {
    EnvObservation obs;
    obs.state = one_hot(row_, kSize);
    Vec c = one_hot(col_, kSize);
    obs.state.insert(obs.state.end(), c.begin(), c.end());
    obs.episode_done = done;
    obs.extrinsic_reward = reward;
    return obs;
  }

  ActionSpec spec_;
  Rng rng_;
  int row_ = 0, col_ = 0;
  int t_ = 0;
  bool done_ = false;
  std::vector<char> visited_;
};

}  // namespace vdm
