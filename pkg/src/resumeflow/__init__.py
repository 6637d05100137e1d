"""resumeflow: tailor a resume to a job posting with an LLM pipeline.

Stages: parse the resume into structured data, extract job details from the
posting, regenerate each section against the job, then score the result for
job alignment and content preservation to surface hallucination risk.
"""

__version__ = "0.1.0"
