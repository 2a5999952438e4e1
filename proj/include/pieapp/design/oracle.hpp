#pragma once

#include "pieapp/design/image.hpp"

namespace pieapp::design {

// Synthetic ground-truth perceptual-error axis: RMSE on [0,1] pixel values
// averaged over three dyadic scales (full, 1/2, 1/4; 2x2 block means,
// ragged edges averaged over their actual extent). Zero iff the images are
// identical; the simulated observers apply the BT model to this axis.
double oracle_score(const Image& dist, const Image& ref);

}  // namespace pieapp::design
