#pragma once

// Umbrella include for the whole library.

#include "acmd/channel.hpp"
#include "acmd/equalizer.hpp"
#include "acmd/errors.hpp"
#include "acmd/fft.hpp"
#include "acmd/fir.hpp"
#include "acmd/metrics.hpp"
#include "acmd/mlse.hpp"
#include "acmd/pipeline.hpp"
#include "acmd/resample.hpp"
#include "acmd/rrc.hpp"
#include "acmd/rx_frontend.hpp"
#include "acmd/scenario.hpp"
#include "acmd/serialize.hpp"
#include "acmd/signal.hpp"
#include "acmd/tx.hpp"
