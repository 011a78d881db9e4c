"""Visual inspection platform for non-metallic pipes.

Core algorithms live in :mod:`iridescan.imaging`, :mod:`iridescan.detect`
and :mod:`iridescan.dataset`; persistence in :mod:`iridescan.store` and
:mod:`iridescan.jobs`; the REST service layer in :mod:`iridescan.services`
and :mod:`iridescan.api`; the offline field client in
:mod:`iridescan.client`.
"""

__version__ = "0.1.0"
