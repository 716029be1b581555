#ifndef NSEDIT_SBL_HPP
#define NSEDIT_SBL_HPP

#include <Eigen/Dense>
#include <functional>
#include <vector>

#include "nsedit/iir.hpp"
#include "nsedit/waveform.hpp"

namespace nsedit {

enum class DictionaryKind { overcomplete_dct, identity, custom };

// Over-complete synthesis dictionary. Columns are unit-norm atoms.
class Dictionary {
 public:
  static Dictionary build(std::size_t signal_dim, double oversampling, DictionaryKind kind);
  static Dictionary custom(Eigen::MatrixXd atoms);

  const Eigen::MatrixXd& atoms() const { return atoms_; }
  const Eigen::MatrixXd& gram() const { return gram_; }  // D^T D, cached
  std::size_t signal_dim() const { return static_cast<std::size_t>(atoms_.rows()); }
  std::size_t num_atoms() const { return static_cast<std::size_t>(atoms_.cols()); }
  DictionaryKind kind() const { return kind_; }

 private:
  Dictionary(Eigen::MatrixXd atoms, DictionaryKind kind);
  Eigen::MatrixXd atoms_;
  Eigen::MatrixXd gram_;
  DictionaryKind kind_;
};

struct SblConfig {
  double lambda = 1e-2;       // sparsity / reconstruction balance
  double epsilon = 1e-6;      // guards the reciprocal in the gamma update
  double delta = 1e-4;        // convergence threshold on gamma
  int max_iterations = 100;
  DictionaryKind dictionary_kind = DictionaryKind::overcomplete_dct;
  double oversampling = 2.0;

  void check() const;
};

struct SblState {
  Eigen::VectorXd gamma;  // strictly positive
  Eigen::VectorXd mu;     // sparse coefficient estimate
  Eigen::MatrixXd sigma;  // symmetric positive definite posterior covariance
  int iteration = 0;
};

struct SblResult {
  Eigen::VectorXd mu;
  int iterations = 0;
  bool converged = false;
};

// One update step:
//   gamma' = 1 / (|mu| + eps)                      (from the entry mu)
//   sigma' = (D^T D / lambda + diag(1/gamma))^-1    (from the entry gamma)
//   mu'    = sigma' D^T x / lambda
SblState sbl_iterate(const SblState& state, const Dictionary& dict,
                     const Eigen::VectorXd& x, const SblConfig& cfg);

// Observer receives every state after the initial one (iteration 1, 2, ...).
using SblObserver = std::function<void(const SblState& prev, const SblState& next)>;

// Iterates from gamma = 1, mu = D^T x until the max-norm of the relative
// gamma change drops below delta or max_iterations is hit. The observer, when
// given, forces materialization of sigma per step; without it the solve path
// skips the explicit inverse.
SblResult sbl_solve(const Eigen::VectorXd& x, const Dictionary& dict, const SblConfig& cfg,
                    const SblObserver& observer = nullptr);

// Frame-wise SBL recovery followed by zero-phase filtering. Hann-windowed
// frames at the given hop are solved independently (in parallel), resynthesized
// as D * mu and overlap-added; the result is filtfilt-ed. Output length and
// sample rate match the input.
Waveform suppress(const Waveform& x_s, const SblConfig& cfg, const IirFilter& filter,
                  std::size_t frame_length, std::size_t hop_length);

}  // namespace nsedit

#endif
