"""File formats: piecewise quasi-polynomial documents, run configs and reports."""
