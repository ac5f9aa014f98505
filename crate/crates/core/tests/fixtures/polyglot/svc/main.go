package main

import (
	"fmt"
	"os"
	"strconv"
	"sync/atomic"

	"example.com/polyglot/svc/queue"
)

type stats struct {
	done  int64
	bytes int64
}

// record updates the counters after a job finishes.
func (s *stats) record(job queue.Job) {
	atomic.AddInt64(&s.done, 1)
	atomic.AddInt64(&s.bytes, int64(len(job.Payload)))
}

func parseWorkers(args []string) int {
	if len(args) < 2 {
		return 4
	}
	n, err := strconv.Atoi(args[1])
	if err != nil || n <= 0 {
		fmt.Fprintln(os.Stderr, "bad worker count, using 4")
		return 4
	}
	return n
}

func main() {
	q := queue.New(64)
	for i := 0; i < 20; i++ {
		job := queue.Job{ID: fmt.Sprintf("job-%02d", i), Priority: i % 3, Payload: make([]byte, i*10)}
		if err := q.Push(job); err != nil {
			fmt.Fprintln(os.Stderr, err)
			os.Exit(1)
		}
	}
	q.Close()

	var s stats
	done := make(chan struct{})
	go func() {
		q.Drain(parseWorkers(os.Args), s.record)
		close(done)
	}()
	<-done
	fmt.Printf("processed %d jobs, %d bytes\n", s.done, s.bytes)
}
