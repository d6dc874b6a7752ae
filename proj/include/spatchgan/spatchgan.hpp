#pragma once

#include "spatchgan/checkpoint.hpp"
#include "spatchgan/config.hpp"
#include "spatchgan/data.hpp"
#include "spatchgan/discriminator.hpp"
#include "spatchgan/embedder.hpp"
#include "spatchgan/errors.hpp"
#include "spatchgan/feature_stats.hpp"
#include "spatchgan/generators.hpp"
#include "spatchgan/image_io.hpp"
#include "spatchgan/layers.hpp"
#include "spatchgan/losses.hpp"
#include "spatchgan/metrics.hpp"
#include "spatchgan/optim.hpp"
#include "spatchgan/plot.hpp"
#include "spatchgan/resize.hpp"
#include "spatchgan/rng.hpp"
#include "spatchgan/spectral_norm.hpp"
#include "spatchgan/tensor.hpp"
#include "spatchgan/trainer.hpp"
