"""Shared test configuration.

Property tests here regenerate schemes and exact-arithmetic oracles per
example, whose cost varies with the drawn seed; the per-example wall-clock
deadline would only add flakiness, so it is off for the whole suite.
"""

import hypothesis

hypothesis.settings.register_profile("onestep", deadline=None)
hypothesis.settings.load_profile("onestep")
