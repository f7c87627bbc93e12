#pragma once

#include "lrse/embedding_store.hpp"
#include "lrse/linalg.hpp"
#include "lrse/mrse.hpp"
#include "lrse/query_engine.hpp"
#include "lrse/rng.hpp"
#include "lrse/roles.hpp"
#include "lrse/scheme.hpp"
#include "lrse/serialization.hpp"
#include "lrse/text_analysis.hpp"
