# Test package for bwalk
