#include <pybind11/pybind11.h>
PYBIND11_MODULE(_tac3d, m) { m.doc() = "tac3d"; }
