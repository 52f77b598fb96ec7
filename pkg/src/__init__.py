# COLA - confidence-level allocation for conformal prediction sets
