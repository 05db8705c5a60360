#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Dense>

#include "sedentary/error.hpp"
#include "sedentary/records.hpp"

namespace sedentary {

// Unconstrained DTW, local cost |a_i - b_j|, steps (1,1), (1,0), (0,1).
inline double dtw_distance(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw DomainError("dtw_distance: empty sequence");
  constexpr double inf = std::numeric_limits<double>::infinity();
  const std::size_t m = b.size();
  std::vector<double> prev(m + 1, inf), curr(m + 1, inf);
  prev[0] = 0.0;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    curr[0] = inf;
    for (std::size_t j = 1; j <= m; ++j) {
      const double best = std::min({prev[j - 1], prev[j], curr[j - 1]});
      curr[j] = best + std::abs(a[i - 1] - b[j - 1]);
    }
    std::swap(prev, curr);
  }
  return prev[m];
}

enum class SequenceKind { SedentaryCounts, MorningSteps, PreviousTotalSteps };

inline SequenceKind parse_sequence_kind(const std::string& s) {
  if (s == "sedentary") return SequenceKind::SedentaryCounts;
  if (s == "morning-steps") return SequenceKind::MorningSteps;
  if (s == "prev-total-steps") return SequenceKind::PreviousTotalSteps;
  throw ConfigError("unknown DTW sequence '" + s +
                    "' (valid: sedentary, morning-steps, prev-total-steps)");
}

inline std::vector<double> extract_sequence(const ParticipantSeries& p, SequenceKind kind) {
  std::vector<double> seq;
  seq.reserve(p.records.size());
  for (const auto& r : p.records) {
    switch (kind) {
      case SequenceKind::SedentaryCounts: seq.push_back(r.target); break;
      case SequenceKind::MorningSteps: seq.push_back(static_cast<double>(r.morning_steps)); break;
      case SequenceKind::PreviousTotalSteps:
        seq.push_back(static_cast<double>(r.prev_total_steps));
        break;
    }
  }
  return seq;
}

struct SimilarityMatrix {
  std::vector<std::string> participant_ids;
  Eigen::MatrixXd distances;

  // 1 / (1 + d): identical sequences map to 1.
  Eigen::MatrixXd similarities() const { return (1.0 + distances.array()).inverse().matrix(); }
};

inline SimilarityMatrix similarity_matrix(const Cohort& cohort,
                                          SequenceKind kind = SequenceKind::SedentaryCounts,
                                          unsigned jobs = 1) {
  const auto m = static_cast<Eigen::Index>(cohort.participants.size());
  std::vector<std::vector<double>> seqs;
  SimilarityMatrix out;
  for (const auto& p : cohort.participants) {
    out.participant_ids.push_back(p.participant_id);
    seqs.push_back(extract_sequence(p, kind));
  }
  out.distances = Eigen::MatrixXd::Zero(m, m);
  std::vector<std::pair<Eigen::Index, Eigen::Index>> pairs;
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = i + 1; j < m; ++j) pairs.emplace_back(i, j);
  for (const auto& s : seqs)
    if (s.empty()) throw DomainError("dtw_distance: empty sequence");

  const auto work = [&](std::size_t first, std::size_t stride) {
    for (std::size_t k = first; k < pairs.size(); k += stride) {
      const auto [i, j] = pairs[k];
      out.distances(i, j) = dtw_distance(seqs[i], seqs[j]);
    }
  };
  jobs = std::max(1u, jobs);
  if (jobs == 1) {
    work(0, 1);
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < jobs; ++w) pool.emplace_back(work, w, jobs);
  }
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = i + 1; j < m; ++j) out.distances(j, i) = out.distances(i, j);
  return out;
}

}  // namespace sedentary
