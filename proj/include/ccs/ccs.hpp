#ifndef CCS_CCS_HPP
#define CCS_CCS_HPP

#include "ccs/codec.hpp"
#include "ccs/core.hpp"
#include "ccs/diagnostics.hpp"
#include "ccs/dictionary_update.hpp"
#include "ccs/experiments.hpp"
#include "ccs/fusion.hpp"
#include "ccs/io.hpp"
#include "ccs/pgm.hpp"
#include "ccs/sensing_update.hpp"
#include "ccs/sparse_coding.hpp"
#include "ccs/sphere_cqp.hpp"
#include "ccs/trainer.hpp"

#endif
