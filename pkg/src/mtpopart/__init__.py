"""mtpopart package."""
