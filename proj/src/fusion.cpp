#include "neucredit/fusion.hpp"

#include <cmath>

namespace neucredit {

namespace {

void check_input(const Matrix& m, std::size_t rows, const char* what) {
  if (m.rows() != rows || m.cols() != 1) {
    throw DimensionError(std::string(what) + ": expected (" + std::to_string(rows) + ", 1), got " +
                         m.shape_string());
  }
}

Var checked(const ParamVars& vars, const std::string& name, std::size_t rows, std::size_t cols) {
  Var v = vars.at(name);
  if (v.rows() != rows || v.cols() != cols) {
    throw DimensionError(name + ": expected (" + std::to_string(rows) + ", " + std::to_string(cols) +
                         "), got " + v.value().shape_string());
  }
  return v;
}

Var with_bias_row(Var x) {
  return concat_rows({x, x.tape()->constant(Matrix(1, x.cols(), 1.0))});
}

}  // namespace

std::string_view to_string(FusionKind kind) { return kind == FusionKind::fc ? "fc" : "mvm"; }

FusionKind parse_fusion_kind(std::string_view name) {
  if (name == "fc") return FusionKind::fc;
  if (name == "mvm") return FusionKind::mvm;
  throw std::invalid_argument("unknown fusion kind '" + std::string(name) + "' (expected fc, mvm)");
}

void init_fusion_params(ParamSet& p, const std::string& prefix, FusionKind kind,
                        const FusionShape& shape, Rng& rng) {
  auto init = [&rng](std::size_t rows, std::size_t cols) {
    const double r = 1.0 / std::sqrt(static_cast<double>(cols));
    return rng.uniform_matrix(rows, cols, -r, r);
  };
  if (kind == FusionKind::fc) {
    p.add(prefix + ".W_F", init(shape.out, shape.loan + shape.order + shape.session));
    p.add(prefix + ".b_F", Matrix(shape.out, 1));
  } else {
    p.add(prefix + ".U_F1", init(shape.out, shape.loan + 1));
    p.add(prefix + ".U_F2", init(shape.out, shape.order + 1));
    p.add(prefix + ".U_F3", init(shape.out, shape.session + 1));
  }
}

Var fuse(const ParamVars& vars, const std::string& prefix, FusionKind kind, const FusionShape& shape,
         Var l, Var ho, Var hs) {
  if (l.rows() != shape.loan || ho.rows() != shape.order || hs.rows() != shape.session ||
      l.cols() != ho.cols() || l.cols() != hs.cols()) {
    throw DimensionError("fuse: inputs " + l.value().shape_string() + ", " + ho.value().shape_string() +
                         ", " + hs.value().shape_string() + " do not match widths (" +
                         std::to_string(shape.loan) + ", " + std::to_string(shape.order) + ", " +
                         std::to_string(shape.session) + ")");
  }
  if (kind == FusionKind::fc) {
    Var W = checked(vars, prefix + ".W_F", shape.out, shape.loan + shape.order + shape.session);
    Var b = checked(vars, prefix + ".b_F", shape.out, 1);
    return tanh(add(matmul(W, concat_rows({l, ho, hs})), b));
  }
  Var U1 = checked(vars, prefix + ".U_F1", shape.out, shape.loan + 1);
  Var U2 = checked(vars, prefix + ".U_F2", shape.out, shape.order + 1);
  Var U3 = checked(vars, prefix + ".U_F3", shape.out, shape.session + 1);
  return hadamard(hadamard(matmul(U1, with_bias_row(l)), matmul(U2, with_bias_row(ho))),
                  matmul(U3, with_bias_row(hs)));
}

Matrix fc_fuse(const FcFusionParams& p, const Matrix& l, const Matrix& ho, const Matrix& hs) {
  const FusionShape shape{l.rows(), ho.rows(), hs.rows(), p.W_F.rows()};
  check_input(l, shape.loan, "fc_fuse l");
  check_input(ho, shape.order, "fc_fuse ho");
  check_input(hs, shape.session, "fc_fuse hs");
  ParamSet ps;
  ps.add("f.W_F", p.W_F);
  ps.add("f.b_F", p.b_F);
  Tape tape;
  ParamVars vars(tape, ps, false);
  return fuse(vars, "f", FusionKind::fc, shape, tape.constant(l), tape.constant(ho), tape.constant(hs))
      .value();
}

Matrix mvm_fuse(const MvmFusionParams& p, const Matrix& l, const Matrix& ho, const Matrix& hs) {
  const FusionShape shape{l.rows(), ho.rows(), hs.rows(), p.U_F1.rows()};
  check_input(l, shape.loan, "mvm_fuse l");
  check_input(ho, shape.order, "mvm_fuse ho");
  check_input(hs, shape.session, "mvm_fuse hs");
  ParamSet ps;
  ps.add("f.U_F1", p.U_F1);
  ps.add("f.U_F2", p.U_F2);
  ps.add("f.U_F3", p.U_F3);
  Tape tape;
  ParamVars vars(tape, ps, false);
  return fuse(vars, "f", FusionKind::mvm, shape, tape.constant(l), tape.constant(ho), tape.constant(hs))
      .value();
}

}  // namespace neucredit
