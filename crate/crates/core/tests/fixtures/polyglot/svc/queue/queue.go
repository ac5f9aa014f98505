package queue

import (
	"errors"
	"sync"
	"time"
)

// ErrClosed is returned by Push after Close.
var ErrClosed = errors.New("queue closed")

// Job is a unit of work with a priority; lower runs first.
type Job struct {
	ID       string
	Priority int
	Payload  []byte
	Enqueued time.Time
}

// Queue is a bounded priority queue safe for concurrent use.
type Queue struct {
	mu     sync.Mutex
	cond   *sync.Cond
	jobs   []Job
	limit  int
	closed bool
}

// New returns a queue holding at most limit jobs.
func New(limit int) *Queue {
	q := &Queue{limit: limit}
	q.cond = sync.NewCond(&q.mu)
	return q
}

// Push inserts a job keeping the slice ordered by priority.
func (q *Queue) Push(job Job) error {
	q.mu.Lock()
	defer q.mu.Unlock()
	if q.closed {
		return ErrClosed
	}
	if len(q.jobs) >= q.limit {
		return errors.New("queue full")
	}
	job.Enqueued = time.Now()
	i := len(q.jobs)
	for i > 0 && q.jobs[i-1].Priority > job.Priority {
		i--
	}
	q.jobs = append(q.jobs, Job{})
	copy(q.jobs[i+1:], q.jobs[i:])
	q.jobs[i] = job
	q.cond.Signal()
	return nil
}

// Pop blocks until a job is available or the queue is closed.
func (q *Queue) Pop() (Job, bool) {
	q.mu.Lock()
	defer q.mu.Unlock()
	for len(q.jobs) == 0 && !q.closed {
		q.cond.Wait()
	}
	if len(q.jobs) == 0 {
		return Job{}, false
	}
	job := q.jobs[0]
	q.jobs = q.jobs[1:]
	return job, true
}

func (q *Queue) Len() int {
	q.mu.Lock()
	defer q.mu.Unlock()
	return len(q.jobs)
}

// Close wakes every waiter; pending jobs can still be popped.
func (q *Queue) Close() {
	q.mu.Lock()
	q.closed = true
	q.mu.Unlock()
	q.cond.Broadcast()
}

// Drain runs fn on each job using the given number of workers.
func (q *Queue) Drain(workers int, fn func(Job)) {
	var wg sync.WaitGroup
	for w := 0; w < workers; w++ {
		wg.Add(1)
		go func() {
			defer wg.Done()
			for {
				job, ok := q.Pop()
				if !ok {
					return
				}
				fn(job)
			}
		}()
	}
	wg.Wait()
}
