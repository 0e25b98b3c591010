#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "divmkt/tree.hpp"

namespace divmkt {

struct CertificateNode {
  int id = 0;
  int parent = -1;
  int depth = 0;
  int grid_index = 0;
  bool retired = false;
  bool in_region = false;
  double mart_residual = 0.0;
  double tube_slack = 0.0;
  double ratio_lo = 1.0;  ///< min over the segment of shadow_i / S_i
  double ratio_hi = 1.0;  ///< max over the segment of shadow_i / S_i
  Eigen::VectorXd pivot;
  Eigen::VectorXd p;  ///< child weights, empty at leaves
  Eigen::VectorXd q;
};

/// Machine-readable record of one verified price-system construction: the
/// tilted weights, martingale residuals, tube slacks, componentwise ratio
/// bounds 1/(1+eta) <= S~_i/S_i <= 1+eta and O-membership, node by node.
struct Certificate {
  int schema_version = 1;
  std::string status;  ///< "certified" or "failed"
  double eta = 0.0;
  double delta = 0.0;
  double mart_tol = 0.0;
  int offending_node = -1;
  std::vector<CertificateNode> nodes;

  bool certified() const { return status == "certified"; }
};

/// Verifies the epsilon-consistent price-system bounds on a tilted tree with
/// shadow prices and emits the certificate. A failed bound yields
/// status "failed" with the offending node recorded; nothing is thrown, the
/// certificate is the audit artifact either way.
Certificate cps_certificate(const TiltedTree& tree, double eta,
                            double mart_tol = 1e-10);

/// Serialization is hexfloat-based, so parse(to_text(c)) reproduces every
/// number bit for bit.
std::string to_text(const Certificate& cert);
Certificate parse_certificate(const std::string& text);

}  // namespace divmkt
