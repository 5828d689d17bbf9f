#pragma once

#include "lamperti/core.hpp"

namespace lamperti {

// (log|Z_{I_t}|_1, arg Z_{I_t}) with I the inverse of s -> int_0^s |Z_r|_1^{-alpha} dr.
// Output events are the images of the input events; a killed or absorbed path ends in the
// cemetery at its lifetime, an alive one is censored at the image of its horizon.
MapPath ssmp_to_map(const SkeletonPath& z, double alpha);

// Inverse direction: polar decomposition (e^{xi_{phi(t)}}, Xi_{phi(t)}), phi the inverse of
// s -> int_0^s e^{alpha xi_r} dr. The cemetery maps to the origin.
SkeletonPath map_to_ssmp(const MapPath& m, double alpha);

// sup over shared events of the coordinatewise difference in values and times
double skeleton_distance(const SkeletonPath& a, const SkeletonPath& b);

}  // namespace lamperti
