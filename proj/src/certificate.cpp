#include "divmkt/certificate.hpp"

#include <cstdio>
#include <cstdlib>
#include <sstream>
#include <stdexcept>

namespace divmkt {

namespace {

std::string hex_double(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%a", x);
  return std::string(buf);
}

void append_vector(std::ostringstream& os, const char* key,
                   const Eigen::VectorXd& v) {
  os << key;
  for (int i = 0; i < v.size(); ++i) os << ' ' << hex_double(v[i]);
  os << '\n';
}

class LineReader {
 public:
  explicit LineReader(const std::string& text) : in_(text) {}

  std::vector<std::string> next(const std::string& expected_key) {
    std::string line;
    if (!std::getline(in_, line))
      throw std::invalid_argument("certificate: unexpected end of input");
    std::istringstream ls(line);
    std::vector<std::string> tokens;
    std::string tok;
    while (ls >> tok) tokens.push_back(tok);
    if (tokens.empty() || tokens[0] != expected_key)
      throw std::invalid_argument("certificate: expected key '" + expected_key +
                                  "' got '" + line + "'");
    return tokens;
  }

  double next_double(const std::string& key) {
    const auto t = next(key);
    if (t.size() != 2) throw std::invalid_argument("certificate: bad " + key);
    return std::strtod(t[1].c_str(), nullptr);
  }

  long next_long(const std::string& key) {
    const auto t = next(key);
    if (t.size() != 2) throw std::invalid_argument("certificate: bad " + key);
    return std::strtol(t[1].c_str(), nullptr, 10);
  }

  Eigen::VectorXd next_vector(const std::string& key) {
    const auto t = next(key);
    Eigen::VectorXd v(static_cast<int>(t.size()) - 1);
    for (std::size_t i = 1; i < t.size(); ++i)
      v[static_cast<int>(i) - 1] = std::strtod(t[i].c_str(), nullptr);
    return v;
  }

 private:
  std::istringstream in_;
};

}  // namespace

Certificate cps_certificate(const TiltedTree& tree, double eta, double mart_tol) {
  if (!tree.tilted)
    throw std::logic_error("cps_certificate: tilt the tree first");
  if (tree.root().shadow.size() == 0)
    throw std::logic_error("cps_certificate: compute shadow prices first");

  Certificate cert;
  cert.eta = eta;
  cert.delta = tree.region.delta();
  cert.mart_tol = mart_tol;
  cert.status = "certified";

  const double lo_bound = 1.0 / (1.0 + eta);
  const double hi_bound = 1.0 + eta;

  for (const TreeNode& node : tree.nodes) {
    CertificateNode cn;
    cn.id = node.id;
    cn.parent = node.parent;
    cn.depth = node.depth;
    cn.grid_index = node.grid_index;
    cn.retired = node.retired;
    cn.in_region = tree.region.contains(node.pivot);
    cn.mart_residual = node.mart_residual;
    cn.pivot = node.pivot;
    cn.p = node.p;
    cn.q = node.q;

    // Shadow value on the bracket (tau_n, tau_{n+1}] is this node's pivot;
    // the root covers its own time-zero point.
    cn.tube_slack = -node.eps_state;
    const int first_row = node.parent < 0 ? 0 : 1;
    for (int r = first_row; r < node.segment.rows(); ++r) {
      const Eigen::VectorXd s = node.segment.row(r);
      cn.tube_slack = std::max(
          cn.tube_slack, (s - node.pivot).norm() - node.eps_segment[r]);
      for (int i = 0; i < s.size(); ++i) {
        const double ratio = node.pivot[i] / s[i];
        cn.ratio_lo = std::min(cn.ratio_lo, ratio);
        cn.ratio_hi = std::max(cn.ratio_hi, ratio);
      }
    }

    double delta_scale = 0.0;
    for (int c : node.children)
      delta_scale = std::max(delta_scale, tree.nodes[c].delta.norm());
    const bool mart_ok =
        node.children.empty() || cn.mart_residual <= mart_tol * std::max(1.0, delta_scale);
    const bool ok = cn.in_region && cn.tube_slack <= 0.0 &&
                    cn.ratio_lo >= lo_bound && cn.ratio_hi <= hi_bound && mart_ok;
    if (!ok && cert.status == "certified") {
      cert.status = "failed";
      cert.offending_node = node.id;
    }
    cert.nodes.push_back(std::move(cn));
  }
  return cert;
}

std::string to_text(const Certificate& cert) {
  std::ostringstream os;
  os << "divmkt-cps-certificate v" << cert.schema_version << '\n';
  os << "status " << cert.status << '\n';
  os << "eta " << hex_double(cert.eta) << '\n';
  os << "delta " << hex_double(cert.delta) << '\n';
  os << "mart_tol " << hex_double(cert.mart_tol) << '\n';
  os << "offending_node " << cert.offending_node << '\n';
  os << "nodes " << cert.nodes.size() << '\n';
  for (const CertificateNode& n : cert.nodes) {
    os << "node " << n.id << '\n';
    os << "parent " << n.parent << '\n';
    os << "depth " << n.depth << '\n';
    os << "grid_index " << n.grid_index << '\n';
    os << "retired " << (n.retired ? 1 : 0) << '\n';
    os << "in_region " << (n.in_region ? 1 : 0) << '\n';
    os << "mart_residual " << hex_double(n.mart_residual) << '\n';
    os << "tube_slack " << hex_double(n.tube_slack) << '\n';
    os << "ratio_lo " << hex_double(n.ratio_lo) << '\n';
    os << "ratio_hi " << hex_double(n.ratio_hi) << '\n';
    append_vector(os, "pivot", n.pivot);
    append_vector(os, "p", n.p);
    append_vector(os, "q", n.q);
    os << "end\n";
  }
  os << "endcert\n";
  return os.str();
}

Certificate parse_certificate(const std::string& text) {
  LineReader reader(text);
  Certificate cert;
  {
    const auto t = reader.next("divmkt-cps-certificate");
    if (t.size() != 2 || t[1] != "v1")
      throw std::invalid_argument("certificate: unsupported version");
    cert.schema_version = 1;
  }
  {
    const auto t = reader.next("status");
    if (t.size() != 2) throw std::invalid_argument("certificate: bad status");
    cert.status = t[1];
  }
  cert.eta = reader.next_double("eta");
  cert.delta = reader.next_double("delta");
  cert.mart_tol = reader.next_double("mart_tol");
  cert.offending_node = static_cast<int>(reader.next_long("offending_node"));
  const long count = reader.next_long("nodes");
  for (long i = 0; i < count; ++i) {
    CertificateNode n;
    n.id = static_cast<int>(reader.next_long("node"));
    n.parent = static_cast<int>(reader.next_long("parent"));
    n.depth = static_cast<int>(reader.next_long("depth"));
    n.grid_index = static_cast<int>(reader.next_long("grid_index"));
    n.retired = reader.next_long("retired") != 0;
    n.in_region = reader.next_long("in_region") != 0;
    n.mart_residual = reader.next_double("mart_residual");
    n.tube_slack = reader.next_double("tube_slack");
    n.ratio_lo = reader.next_double("ratio_lo");
    n.ratio_hi = reader.next_double("ratio_hi");
    n.pivot = reader.next_vector("pivot");
    n.p = reader.next_vector("p");
    n.q = reader.next_vector("q");
    reader.next("end");
    cert.nodes.push_back(std::move(n));
  }
  reader.next("endcert");
  return cert;
}

}  // namespace divmkt
