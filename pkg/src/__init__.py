# Robust Relay Designer