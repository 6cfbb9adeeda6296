"""Baseband simulator for a monostatic full-duplex sensing and communication link."""
