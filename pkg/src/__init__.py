# DRUM magnetometry toolkit
