"""Outage probability and average SER of a fixed-gain amplify-and-forward
relay with a Rician RF first hop and a Gamma-Gamma FSO second hop.

Three engines evaluate every metric: closed-form Meijer-G series, direct
numerical quadrature, and seeded Monte Carlo.
"""

from .channels import (
    GammaGammaParams,
    RicianParams,
    RngStream,
    gg_snr_pdf,
    rician_snr_cdf,
    rician_snr_pdf,
    sample_gg_snr,
    sample_rician_snr,
)
from .montecarlo import McEstimate, simulate_outage, simulate_ser
from .relay import (
    Modulation,
    RelaySystem,
    SeriesControl,
    SeriesResult,
    TruncationWarning,
    aser_closed_form,
    aser_quadrature,
    db_to_linear,
    end_to_end_snr,
    high_snr_slope,
    linear_to_db,
    outage_closed_form,
    outage_quadrature,
    pdf_closed_form,
    pdf_quadrature,
)
from .specfun import (
    DomainError,
    EvalAccuracy,
    EvaluationError,
    MeijerGSpec,
    bessel_i,
    bessel_k,
    marcum_q1,
    meijer_g,
    meijer_g_oracle,
)

__version__ = "0.1.0"
