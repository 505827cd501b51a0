#pragma once

#include "c2p/baselines/cpd.hpp"
#include "c2p/baselines/icp.hpp"
#include "c2p/baselines/nicp.hpp"
#include "c2p/coarse/coarse_register.hpp"
#include "c2p/config.hpp"
#include "c2p/eval/benchmark.hpp"
#include "c2p/eval/methods.hpp"
#include "c2p/eval/metrics.hpp"
#include "c2p/eval/trends.hpp"
#include "c2p/geom/chamfer.hpp"
#include "c2p/geom/io.hpp"
#include "c2p/geom/kdtree.hpp"
#include "c2p/geom/pca.hpp"
#include "c2p/geom/rigid.hpp"
#include "c2p/ndp/c2p_register.hpp"
#include "c2p/synthgen/dataset.hpp"
