#pragma once

#include <thermocad/classify.hpp>
#include <thermocad/error.hpp>
#include <thermocad/eval.hpp>
#include <thermocad/imgio.hpp>
#include <thermocad/model_io.hpp>
#include <thermocad/report.hpp>
#include <thermocad/texture.hpp>
