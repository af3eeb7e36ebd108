// SPDX-License-Identifier: Apache-2.0
//
// cfmimo: channel laboratory for co-located, distributed and cell-free massive MIMO arrays
// Copyright (C) 2026 The cfmimo authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#pragma once

// Private FFT helpers shared by the sounding and spectral-analysis modules.
// Eigen's FFT front end; FFTW backs it when EIGEN_FFTW_DEFAULT is defined.

#include <Eigen/Dense>
#include <complex>
#include <unsupported/Eigen/FFT>
#include <vector>

namespace cfmimo::detail
{
    using cvec = std::vector<std::complex<double>>;

    inline Eigen::FFT<double> &fft_engine()
    {
        thread_local Eigen::FFT<double> engine = []
        {
            Eigen::FFT<double> f;
            f.SetFlag(Eigen::FFT<double>::Unscaled);
            return f;
        }();
        return engine;
    }

    // X[k] = sum_n x[n] exp(-j 2 pi k n / N)
    inline void dft_forward(cvec &out, const cvec &in) { fft_engine().fwd(out, in); }

    // x[n] = sum_k X[k] exp(+j 2 pi k n / N), no 1/N
    inline void dft_inverse(cvec &out, const cvec &in) { fft_engine().inv(out, in); }
}
