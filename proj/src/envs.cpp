#include "dice/env.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <deque>
#include <numbers>

#include "dice/errors.hpp"

namespace dice {

namespace {

double clamp_axis(double v, double lo, double hi, bool* clamped) {
  if (v < lo) {
    *clamped = true;
    return lo;
  }
  if (v > hi) {
    *clamped = true;
    return hi;
  }
  return v;
}

class PointGoal2D final : public Env {
 public:
  explicit PointGoal2D(const PointGoalParams& p) : p_(p) {
    if (p_.goals < 1 || p_.horizon < 1 || p_.goal_distance <= 0.0)
      throw ConfigError("PointGoal2D: invalid parameters");
    spec_.name = "pointgoal2d";
    spec_.obs_dim = 2 + 2 * p_.goals;
    spec_.kind = ActionKind::Continuous;
    spec_.action_dim = 2;
    spec_.action_low = -1.0;
    spec_.action_high = 1.0;
    spec_.horizon = p_.horizon;
    goals_.resize(p_.goals);
    // Distinct angles, equal distance; first goal points straight up.
    for (int g = 0; g < p_.goals; ++g) {
      double ang = 0.5 * std::numbers::pi +
                   2.0 * std::numbers::pi * static_cast<double>(g) / p_.goals;
      goals_[g] = {p_.goal_distance * std::cos(ang),
                   p_.goal_distance * std::sin(ang)};
    }
  }

  const EnvSpec& spec() const override { return spec_; }

  std::vector<double> reset(std::uint64_t /*seed*/) override {
    pos_ = {0.0, 0.0};
    steps_ = 0;
    done_ = false;
    return observe();
  }

  StepResult step(const Action& action) override {
    if (done_) throw ConfigError("PointGoal2D: step after done");
    if (action.cont.size() != 2)
      throw ConfigError("PointGoal2D: action must be 2-D");
    bool clamped = false;
    double ax = clamp_axis(action.cont[0], -1.0, 1.0, &clamped);
    double ay = clamp_axis(action.cont[1], -1.0, 1.0, &clamped);
    pos_[0] += p_.step_size * ax;
    pos_[1] += p_.step_size * ay;
    steps_ += 1;

    StepResult r;
    r.reward = -p_.step_cost;
    double min_dist = 1e300;
    int reached = -1;
    for (int g = 0; g < p_.goals; ++g) {
      double dx = goals_[g][0] - pos_[0];
      double dy = goals_[g][1] - pos_[1];
      double d = std::sqrt(dx * dx + dy * dy);
      if (d < min_dist) min_dist = d;
      if (d <= p_.goal_radius && reached < 0) reached = g;
    }
    if (reached >= 0) {
      r.reward += p_.goal_bonus;
      r.done = true;
    }
    if (steps_ >= p_.horizon) r.done = true;
    done_ = r.done;
    r.next_obs = observe();
    r.info["min_goal_dist"] = min_dist;
    r.info["clamped"] = clamped ? 1.0 : 0.0;
    if (reached >= 0) r.info["goal_index"] = reached;
    return r;
  }

  std::unique_ptr<Env> clone() const override {
    return std::make_unique<PointGoal2D>(p_);
  }

 private:
  std::vector<double> observe() const {
    std::vector<double> o;
    o.reserve(spec_.obs_dim);
    o.push_back(pos_[0]);
    o.push_back(pos_[1]);
    for (const auto& g : goals_) {
      o.push_back(g[0] - pos_[0]);
      o.push_back(g[1] - pos_[1]);
    }
    return o;
  }

  PointGoalParams p_;
  EnvSpec spec_;
  std::vector<std::array<double, 2>> goals_;
  std::array<double, 2> pos_{0.0, 0.0};
  int steps_ = 0;
  bool done_ = false;
};

// Fixed maze. '#' wall, 'S' start, 'G' goal. One-hot index = row * 8 + col.
constexpr std::array<const char*, 8> kMaze = {
    "########",  //
    "#S.....#",  //
    "#.###..#",  //
    "#...#..#",  //
    "#.#.##.#",  //
    "#.#....#",  //
    "#.###.G#",  //
    "########",
};

class GridMaze final : public Env {
 public:
  explicit GridMaze(int horizon) : horizon_(horizon) {
    if (horizon < 1) throw ConfigError("GridMaze: horizon must be >= 1");
    spec_.name = "gridmaze";
    spec_.obs_dim = 64;
    spec_.kind = ActionKind::Discrete;
    spec_.action_dim = 4;  // up, down, left, right
    spec_.horizon = horizon;
    for (int r = 0; r < 8; ++r)
      for (int c = 0; c < 8; ++c) {
        if (kMaze[r][c] == 'S') start_ = {r, c};
        if (kMaze[r][c] == 'G') goal_ = {r, c};
      }
  }

  const EnvSpec& spec() const override { return spec_; }

  std::vector<double> reset(std::uint64_t /*seed*/) override {
    pos_ = start_;
    steps_ = 0;
    done_ = false;
    return observe();
  }

  StepResult step(const Action& action) override {
    if (done_) throw ConfigError("GridMaze: step after done");
    if (action.disc < 0 || action.disc >= 4)
      throw ConfigError("GridMaze: action out of range");
    static constexpr int dr[4] = {-1, 1, 0, 0};
    static constexpr int dc[4] = {0, 0, -1, 1};
    int nr = pos_[0] + dr[action.disc];
    int nc = pos_[1] + dc[action.disc];
    if (kMaze[nr][nc] != '#') pos_ = {nr, nc};
    steps_ += 1;

    StepResult r;
    if (pos_ == goal_) {
      r.reward = 1.0;
      r.done = true;
    }
    if (steps_ >= horizon_) r.done = true;
    done_ = r.done;
    r.next_obs = observe();
    return r;
  }

  std::unique_ptr<Env> clone() const override {
    return std::make_unique<GridMaze>(horizon_);
  }

 private:
  std::vector<double> observe() const {
    std::vector<double> o(64, 0.0);
    o[pos_[0] * 8 + pos_[1]] = 1.0;
    return o;
  }

  EnvSpec spec_;
  int horizon_;
  std::array<int, 2> start_{1, 1}, goal_{6, 6};
  std::array<int, 2> pos_{1, 1};
  int steps_ = 0;
  bool done_ = false;
};

class LineReturn final : public Env {
 public:
  explicit LineReturn(int horizon) : horizon_(horizon) {
    if (horizon < 1) throw ConfigError("LineReturn: horizon must be >= 1");
    spec_.name = "linereturn";
    spec_.obs_dim = 1;
    spec_.kind = ActionKind::Continuous;
    spec_.action_dim = 1;
    spec_.action_low = -1.0;
    spec_.action_high = 1.0;
    spec_.horizon = horizon;
  }

  const EnvSpec& spec() const override { return spec_; }

  std::vector<double> reset(std::uint64_t /*seed*/) override {
    x_ = 0.0;
    steps_ = 0;
    done_ = false;
    return {x_};
  }

  StepResult step(const Action& action) override {
    if (done_) throw ConfigError("LineReturn: step after done");
    if (action.cont.size() != 1)
      throw ConfigError("LineReturn: action must be 1-D");
    bool clamped = false;
    double a = clamp_axis(action.cont[0], -1.0, 1.0, &clamped);
    x_ += 0.25 * a;
    steps_ += 1;
    StepResult r;
    double s = std::abs(x_) - 1.0;
    r.reward = -s * s;
    r.done = steps_ >= horizon_;
    done_ = r.done;
    r.next_obs = {x_};
    r.info["clamped"] = clamped ? 1.0 : 0.0;
    return r;
  }

  std::unique_ptr<Env> clone() const override {
    return std::make_unique<LineReturn>(horizon_);
  }

 private:
  EnvSpec spec_;
  int horizon_;
  double x_ = 0.0;
  int steps_ = 0;
  bool done_ = false;
};

}  // namespace

std::unique_ptr<Env> make_point_goal_2d(const PointGoalParams& p) {
  return std::make_unique<PointGoal2D>(p);
}

std::unique_ptr<Env> make_grid_maze(int horizon) {
  return std::make_unique<GridMaze>(horizon);
}

std::unique_ptr<Env> make_line_return(int horizon) {
  return std::make_unique<LineReturn>(horizon);
}

int grid_maze_shortest_path() {
  // BFS over the maze above.
  std::array<std::array<int, 8>, 8> dist{};
  for (auto& row : dist) row.fill(-1);
  std::array<int, 2> start{0, 0}, goal{0, 0};
  for (int r = 0; r < 8; ++r)
    for (int c = 0; c < 8; ++c) {
      if (kMaze[r][c] == 'S') start = {r, c};
      if (kMaze[r][c] == 'G') goal = {r, c};
    }
  std::deque<std::array<int, 2>> q{start};
  dist[start[0]][start[1]] = 0;
  while (!q.empty()) {
    auto [r, c] = q.front();
    q.pop_front();
    static constexpr int dr[4] = {-1, 1, 0, 0};
    static constexpr int dc[4] = {0, 0, -1, 1};
    for (int k = 0; k < 4; ++k) {
      int nr = r + dr[k], nc = c + dc[k];
      if (kMaze[nr][nc] != '#' && dist[nr][nc] < 0) {
        dist[nr][nc] = dist[r][c] + 1;
        q.push_back({nr, nc});
      }
    }
  }
  return dist[goal[0]][goal[1]];
}

}  // namespace dice
