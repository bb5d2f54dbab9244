# ABOUTME: Test package for Robust Relay Designer.
# ABOUTME: Contains unit tests for core modules.
