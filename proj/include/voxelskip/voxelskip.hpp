#pragma once

#include <voxelskip/bench.hpp>
#include <voxelskip/hybrid.hpp>
#include <voxelskip/kdtree.hpp>
#include <voxelskip/lbvh.hpp>
#include <voxelskip/math.hpp>
#include <voxelskip/morton.hpp>
#include <voxelskip/render.hpp>
#include <voxelskip/svt.hpp>
#include <voxelskip/volume.hpp>
