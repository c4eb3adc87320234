#pragma once

#include "simulst/asr_backend.hpp"
#include "simulst/commit_policies.hpp"
#include "simulst/core_model.hpp"
#include "simulst/errors.hpp"
#include "simulst/glossary_bias.hpp"
#include "simulst/hallucination_control.hpp"
#include "simulst/latency_metrics.hpp"
#include "simulst/quality_metrics.hpp"
#include "simulst/reporting.hpp"
#include "simulst/session_engine.hpp"
#include "simulst/text.hpp"
