#pragma once

#include <string>
#include <string_view>

#include "neucredit/autodiff.hpp"
#include "neucredit/matrix.hpp"
#include "neucredit/rng.hpp"

namespace neucredit {

enum class FusionKind { fc, mvm };

std::string_view to_string(FusionKind kind);
FusionKind parse_fusion_kind(std::string_view name);

struct FusionShape {
  std::size_t loan = 1;     // d_l
  std::size_t order = 1;    // d_ho
  std::size_t session = 1;  // d_hs
  std::size_t out = 5;      // d_z
};

/// z = tanh(W_F [l; ho; hs] + b_F)
struct FcFusionParams {
  Matrix W_F;  // (d_z, d_l + d_ho + d_hs)
  Matrix b_F;  // (d_z, 1)
};

/// z = (U_F1 [l; 1]) . (U_F2 [ho; 1]) . (U_F3 [hs; 1])
struct MvmFusionParams {
  Matrix U_F1;  // (d_z, d_l + 1)
  Matrix U_F2;  // (d_z, d_ho + 1)
  Matrix U_F3;  // (d_z, d_hs + 1)
};

Matrix fc_fuse(const FcFusionParams& p, const Matrix& l, const Matrix& ho, const Matrix& hs);
Matrix mvm_fuse(const MvmFusionParams& p, const Matrix& l, const Matrix& ho, const Matrix& hs);

/// Adds fusion parameters under prefix ("<prefix>.W_F", ... or "<prefix>.U_F1", ...).
void init_fusion_params(ParamSet& p, const std::string& prefix, FusionKind kind,
                        const FusionShape& shape, Rng& rng);

/// Batched fusion on a tape; inputs are column batches with matching column counts.
Var fuse(const ParamVars& vars, const std::string& prefix, FusionKind kind, const FusionShape& shape,
         Var l, Var ho, Var hs);

}  // namespace neucredit
